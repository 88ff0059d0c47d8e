//! Plug a custom refiner into one stage of the verified loop.
//!
//! The engine dispatches each stage to a registered [`StageModule`];
//! the default is gradient descent, but anything that proposes a
//! candidate factor works — here, a cheat module that knows the true
//! translation. Verification still guards every proposal, so a bad
//! module can never make the result worse.
//!
//! ```bash
//! cargo run --release -p bimanual --example custom_stage_module
//! ```

use bimanual::harness::PerturbationScales;
use bimanual::refine::{RefineEngine, StageContext, StageModule};
use bimanual::{
    build_template, generate_scene, Factor, InteractionPreset, RefineConfig, SceneSpec,
    TemplateConfig, TwoHandParams,
};
use nalgebra::Vector3;

struct TranslationOracle {
    truth: Vector3<f64>,
}

impl StageModule for TranslationOracle {
    fn name(&self) -> &'static str {
        "translation-oracle"
    }

    fn propose(
        &self,
        _factor: Factor,
        params: &TwoHandParams,
        _ctx: &StageContext<'_>,
    ) -> bimanual::Result<TwoHandParams> {
        let mut candidate = params.clone();
        candidate.translation = self.truth;
        Ok(candidate)
    }
}

/// A hostile module: proposes garbage. Verification must reject it.
struct Saboteur;

impl StageModule for Saboteur {
    fn name(&self) -> &'static str {
        "saboteur"
    }

    fn propose(
        &self,
        _factor: Factor,
        params: &TwoHandParams,
        _ctx: &StageContext<'_>,
    ) -> bimanual::Result<TwoHandParams> {
        let mut candidate = params.clone();
        candidate.translation += Vector3::new(0.0, 0.0, -0.05); // deepen the collision
        Ok(candidate)
    }
}

fn main() -> anyhow::Result<()> {
    let template = build_template(&TemplateConfig::default())?;
    let scene = generate_scene(
        &SceneSpec {
            seed: 3,
            preset: InteractionPreset::Clasp,
            perturbation: PerturbationScales::default(),
            joint_noise_std_mm: 5.0,
        },
        &template,
    )?;
    let config = RefineConfig::default();

    for (label, module) in [
        (
            "oracle",
            Box::new(TranslationOracle {
                truth: scene.gt_params.translation,
            }) as Box<dyn StageModule>,
        ),
        ("saboteur", Box::new(Saboteur) as Box<dyn StageModule>),
    ] {
        let mut engine = RefineEngine::new();
        engine.register_stage_module(Factor::Translation, module);
        let (_, report) = engine.refine(&scene.initial_params, &scene.targets, &template, &config)?;
        let stage = &report.stages[0];
        println!(
            "{label:<9} proposal: accepted={} (e_col {:.5} -> {:.5}, e_3d {:.5} -> {:.5})",
            stage.accepted, stage.before.e_col, stage.candidate.e_col, stage.before.e_3d, stage.candidate.e_3d
        );
        println!(
            "          pipeline result never worse: e_col {:.5} -> {:.5}, e_3d {:.5} -> {:.5}",
            report.initial_errors.e_col,
            report.final_errors.e_col,
            report.initial_errors.e_3d,
            report.final_errors.e_3d
        );
    }
    Ok(())
}
