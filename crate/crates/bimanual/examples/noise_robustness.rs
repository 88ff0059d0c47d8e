//! Sweep the pseudo-ground-truth joint noise and watch how refinement
//! quality responds: pose accuracy tracks the target quality while
//! collision removal barely depends on it.
//!
//! ```bash
//! cargo run --release -p bimanual --example noise_robustness
//! ```

use bimanual::harness::{run_noise_sweep, PerturbationScales};
use bimanual::{CorpusSpec, InteractionPreset, RefineConfig, TemplateConfig};

fn main() -> anyhow::Result<()> {
    let template = bimanual::build_template(&TemplateConfig::default())?;
    let corpus = CorpusSpec {
        scene_count: 12,
        base_seed: 500,
        presets: vec![InteractionPreset::Clasp, InteractionPreset::Interlace],
        perturbation: PerturbationScales::default(),
        joint_noise_std_mm: 0.0,
    };
    let report = run_noise_sweep(
        &corpus,
        &[0.0, 10.0, 20.0, 30.0, 40.0],
        &RefineConfig::default(),
        &template,
    )?;

    println!(
        "{:>10} | {:>18} | {:>18}",
        "noise", "I-MPJPE (mm)", "AVE-P (mm)"
    );
    println!("{:>10} | {:>8} {:>9} | {:>8} {:>9}", "(mm)", "initial", "refined", "initial", "refined");
    for row in &report.rows {
        println!(
            "{:>10.0} | {:>8.2} {:>9.2} | {:>8.3} {:>9.3}",
            row.joint_noise_std_mm,
            row.initial.i_mpjpe_mm,
            row.refined.i_mpjpe_mm,
            row.initial.ave_p_mm,
            row.refined.ave_p_mm
        );
    }
    println!("\nsame scene seeds at every level; only the target noise differs.");
    Ok(())
}
