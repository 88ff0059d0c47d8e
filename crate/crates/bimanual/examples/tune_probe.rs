//! Temporary tuning probe (removed before release).
use bimanual::harness::*;
use bimanual::refine::RefineConfig;
use bimanual::template::{build_template, TemplateConfig};
use std::time::Instant;

fn main() {
    let t = build_template(&TemplateConfig::default()).unwrap();
    let config = RefineConfig::default();
    let corpus = CorpusSpec {
        scene_count: 32,
        base_seed: 100,
        presets: vec![InteractionPreset::Clasp, InteractionPreset::Interlace],
        perturbation: PerturbationScales::default(),
        joint_noise_std_mm: 10.0,
    };
    let start = Instant::now();
    let (_, row) = run_experiment_detailed(&corpus, &config, &t).unwrap();
    println!("{:.2} s/scene", start.elapsed().as_secs_f64() / 32.0);
    println!("AVE-P {:.4} -> {:.4} ({:.1}%)  I-MPJPE {:.3} -> {:.3}",
        row.initial.ave_p_mm, row.refined.ave_p_mm, (1.0 - row.refined.ave_p_mm/row.initial.ave_p_mm)*100.0,
        row.initial.i_mpjpe_mm, row.refined.i_mpjpe_mm);
}
