//! Synthetic interacting-hand scenes and batch experiments.
//!
//! Each scene consists of a collision-free (or lightly touching)
//! ground-truth configuration, a perturbed initial estimate whose
//! perturbation emphasis depends on the preset (so different presets
//! produce collisions caused by different factors), and noisy
//! pseudo-ground-truth joint targets. Everything is deterministic in
//! the scene seed.
//!
//! Presets:
//! * `clasp` — palms stacked with a small vertical clearance; the
//!   translation perturbation closes the gap (location-caused
//!   collisions);
//! * `interlace` — fingers of one hand between the other's; finger-pose
//!   perturbations collide (pose-caused);
//! * `point-touch` — extended index fingers nearly touching;
//!   orientation perturbations collide;
//! * `near-miss` — a clearly separated pair; shape perturbations
//!   dominate and collisions stay rare.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::penetration_metrics;
use crate::error::Error;
use crate::kinematics::{forward, TOTAL_KEYPOINTS};
use crate::metrics::{i_mpjpe_mm, mpjpe_mm};
use crate::objective::JointTargets;
use crate::params::{Factor, TwoHandParams};
use crate::refine::{default_camera, factorized_refine, RefineConfig, RefineReport};
use crate::rotation::{axis_angle_from_rotation, rodrigues};
use crate::template::{HandTemplate, FINGER_COUNT};
use crate::Result;

/// Maximum ground-truth penetration accepted by the generator, mm.
pub const GT_AVE_P_LIMIT_MM: f64 = 0.5;
/// Rejection-sampling budget per scene.
const MAX_GENERATION_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionPreset {
    Clasp,
    Interlace,
    PointTouch,
    NearMiss,
}

impl InteractionPreset {
    pub const ALL: [InteractionPreset; 4] = [
        InteractionPreset::Clasp,
        InteractionPreset::Interlace,
        InteractionPreset::PointTouch,
        InteractionPreset::NearMiss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InteractionPreset::Clasp => "clasp",
            InteractionPreset::Interlace => "interlace",
            InteractionPreset::PointTouch => "point-touch",
            InteractionPreset::NearMiss => "near-miss",
        }
    }

    /// Per-factor multipliers applied to the perturbation scales:
    /// each preset biases which factor causes its collisions.
    fn perturbation_profile(self) -> [f64; 4] {
        // [translation, orientation, fingers, shape]
        match self {
            InteractionPreset::Clasp => [1.0, 0.25, 0.25, 0.25],
            InteractionPreset::Interlace => [0.3, 0.25, 1.0, 0.25],
            InteractionPreset::PointTouch => [0.3, 1.0, 0.3, 0.25],
            InteractionPreset::NearMiss => [0.3, 0.3, 0.3, 1.0],
        }
    }
}

impl std::str::FromStr for InteractionPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clasp" => Ok(InteractionPreset::Clasp),
            "interlace" => Ok(InteractionPreset::Interlace),
            "point-touch" | "point_touch" => Ok(InteractionPreset::PointTouch),
            "near-miss" | "near_miss" => Ok(InteractionPreset::NearMiss),
            other => Err(Error::InvalidConfig(format!("unknown preset '{other}'"))),
        }
    }
}

/// Standard deviations of the per-factor initial-estimate perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationScales {
    pub translation_m: f64,
    pub orientation_rad: f64,
    pub fingers_rad: f64,
    pub shape: f64,
}

impl Default for PerturbationScales {
    fn default() -> Self {
        // harness conventions, not published statistics
        Self {
            translation_m: 0.020,
            orientation_rad: 0.15,
            fingers_rad: 0.12,
            shape: 0.5,
        }
    }
}

impl PerturbationScales {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.translation_m,
            self.orientation_rad,
            self.fingers_rad,
            self.shape,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(
                "perturbation scales must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Full specification of one synthetic scene.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub preset: InteractionPreset,
    pub perturbation: PerturbationScales,
    /// Isotropic Gaussian noise added to the target joints, millimeters.
    pub joint_noise_std_mm: f64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.perturbation.validate()?;
        if !(self.joint_noise_std_mm.is_finite() && self.joint_noise_std_mm >= 0.0) {
            return Err(Error::InvalidConfig("joint noise std must be non-negative".into()));
        }
        Ok(())
    }
}

/// A generated scene: ground truth, perturbed initial estimate, and the
/// targets refinement will see.
#[derive(Clone, Debug)]
pub struct Scene {
    pub gt_params: TwoHandParams,
    pub initial_params: TwoHandParams,
    pub targets: JointTargets,
    pub spec: SceneSpec,
}

fn sample_gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn sample_vec(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    Vector3::new(sample_gauss(rng), sample_gauss(rng), sample_gauss(rng)) * sigma
}

/// Curl one hand's fingers: a per-finger swing about the axis
/// perpendicular to the finger ray within the palm plane, bending the
/// chain toward the palm normal.
fn apply_curl(
    pose: &mut crate::params::FingerPose,
    template: &HandTemplate,
    finger: usize,
    angles: [f64; 3],
) {
    let k = HandTemplate::finger_joint_keypoints(finger);
    let dir = (template.rest_keypoints[k[1]] - template.rest_keypoints[k[0]]).normalize();
    let axis = dir.cross(&Vector3::z()).normalize();
    for j in 0..3 {
        pose.joint_rotations[k[j] - 1] = axis * angles[j];
    }
}

/// Base ground-truth layout per preset, before jitter. The left hand
/// shares the right-hand template; its global orientation turns it to
/// face the right hand.
fn preset_base(preset: InteractionPreset, template: &HandTemplate, rng: &mut ChaCha8Rng) -> TwoHandParams {
    let mut p = TwoHandParams::rest();
    let jitter_angle = 0.06;
    let jitter_tau = 0.004;

    // palms facing: left rotated half a turn about y
    let face_down = rodrigues(&Vector3::new(0.0, std::f64::consts::PI, 0.0));
    let left_jitter = rodrigues(&sample_vec(rng, jitter_angle));
    let right_jitter = rodrigues(&sample_vec(rng, jitter_angle));

    // shared shape with small per-hand variation
    for k in 0..10 {
        let common: f64 = (sample_gauss(rng) * 0.25).clamp(-0.7, 0.7);
        p.left_shape.coefficients[k] = common + sample_gauss(rng) * 0.04;
        p.right_shape.coefficients[k] = common + sample_gauss(rng) * 0.04;
    }

    let curl_jitter = |rng: &mut ChaCha8Rng, base: [f64; 3]| -> [f64; 3] {
        [
            base[0] + sample_gauss(rng) * 0.05,
            base[1] + sample_gauss(rng) * 0.05,
            base[2] + sample_gauss(rng) * 0.05,
        ]
    };

    match preset {
        InteractionPreset::Clasp | InteractionPreset::NearMiss => {
            p.right_orient.axis_angle = axis_angle_from_rotation(&right_jitter);
            p.left_orient.axis_angle = axis_angle_from_rotation(&(left_jitter * face_down));
            for f in 0..FINGER_COUNT {
                let base = [0.05, 0.06, 0.04];
                apply_curl(&mut p.right_fingers, template, f, curl_jitter(rng, base));
                apply_curl(&mut p.left_fingers, template, f, curl_jitter(rng, base));
            }
            let dz = if preset == InteractionPreset::Clasp { 0.038 } else { 0.065 };
            p.translation = Vector3::new(0.010, -0.012, dz) + sample_vec(rng, jitter_tau);
        }
        InteractionPreset::Interlace => {
            p.right_orient.axis_angle = axis_angle_from_rotation(&right_jitter);
            p.left_orient.axis_angle = axis_angle_from_rotation(&(left_jitter * face_down));
            for f in 0..FINGER_COUNT {
                let base = [0.05, 0.06, 0.04];
                apply_curl(&mut p.right_fingers, template, f, curl_jitter(rng, base));
                apply_curl(&mut p.left_fingers, template, f, curl_jitter(rng, base));
            }
            p.translation = Vector3::new(0.024, 0.055, 0.034) + sample_vec(rng, jitter_tau);
        }
        InteractionPreset::PointTouch => {
            // fingers point at each other: left turned half a turn about z
            let face_back = rodrigues(&Vector3::new(0.0, 0.0, std::f64::consts::PI));
            p.right_orient.axis_angle = axis_angle_from_rotation(&right_jitter);
            p.left_orient.axis_angle = axis_angle_from_rotation(&(left_jitter * face_back));
            for f in 0..FINGER_COUNT {
                let base = if f == 1 { [0.03, 0.03, 0.02] } else { [1.1, 1.2, 0.7] };
                apply_curl(&mut p.right_fingers, template, f, curl_jitter(rng, base));
                apply_curl(&mut p.left_fingers, template, f, curl_jitter(rng, base));
            }
            p.translation = Vector3::new(-0.115, 0.345, 0.012) + sample_vec(rng, jitter_tau);
        }
    }
    p
}

/// Perturb the ground truth into the initial estimate. The translation
/// component is biased toward the other hand so location errors close
/// the inter-hand gap.
fn perturb(
    gt: &TwoHandParams,
    spec: &SceneSpec,
    rng: &mut ChaCha8Rng,
) -> TwoHandParams {
    let profile = spec.preset.perturbation_profile();
    let s = &spec.perturbation;
    let mut p = gt.clone();

    // translation: mostly along the closing direction
    let sigma_t = s.translation_m * profile[Factor::Translation.index()];
    if sigma_t > 0.0 {
        let toward = if gt.translation.norm() > 1e-9 {
            -gt.translation.normalize()
        } else {
            -Vector3::z()
        };
        let axial: f64 = sample_gauss(rng).abs() * 0.85;
        let lateral = sample_vec(rng, 0.5);
        let lateral = lateral - toward * lateral.dot(&toward);
        p.translation += (toward * axial + lateral) * sigma_t;
    }

    // orientations
    let sigma_o = s.orientation_rad * profile[Factor::Orientation.index()];
    if sigma_o > 0.0 {
        let dl = rodrigues(&sample_vec(rng, sigma_o));
        let dr = rodrigues(&sample_vec(rng, sigma_o));
        p.left_orient.axis_angle =
            axis_angle_from_rotation(&(dl * rodrigues(&gt.left_orient.axis_angle)));
        p.right_orient.axis_angle =
            axis_angle_from_rotation(&(dr * rodrigues(&gt.right_orient.axis_angle)));
    }

    // finger poses
    let sigma_f = s.fingers_rad * profile[Factor::Fingers.index()];
    if sigma_f > 0.0 {
        for r in p
            .left_fingers
            .joint_rotations
            .iter_mut()
            .chain(p.right_fingers.joint_rotations.iter_mut())
        {
            *r += sample_vec(rng, sigma_f);
        }
    }

    // shapes
    let sigma_b = s.shape * profile[Factor::Shape.index()];
    if sigma_b > 0.0 {
        for c in p
            .left_shape
            .coefficients
            .iter_mut()
            .chain(p.right_shape.coefficients.iter_mut())
        {
            *c += sample_gauss(rng) * sigma_b;
        }
    }
    p
}

/// Generate one scene. Ground truth is rejection-sampled until its
/// penetration stays under [`GT_AVE_P_LIMIT_MM`]; failure after 100
/// attempts is an explicit error.
pub fn generate_scene(spec: &SceneSpec, template: &HandTemplate) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grid = crate::sdf::GridConfig::default();

    let mut gt = None;
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let candidate = preset_base(spec.preset, template, &mut rng);
        let mesh = forward(template, &candidate)?;
        let pen = penetration_metrics(&mesh, &grid)?;
        if pen.ave_p_mm <= GT_AVE_P_LIMIT_MM {
            gt = Some(candidate);
            break;
        }
    }
    let gt = gt.ok_or_else(|| {
        Error::GenerationFailure(format!(
            "preset {} seed {} exceeded the ground-truth penetration bound in {} attempts",
            spec.preset.name(),
            spec.seed,
            MAX_GENERATION_ATTEMPTS
        ))
    })?;

    let initial = perturb(&gt, spec, &mut rng);
    initial.validate()?;

    let camera = default_camera();
    let gt_mesh = forward(template, &gt)?;
    let mut noisy = gt_mesh.joints_3d;
    let sigma_m = spec.joint_noise_std_mm / 1000.0;
    for j in noisy.iter_mut() {
        *j += sample_vec(&mut rng, sigma_m);
    }
    // 2D targets stay clean: they come from projecting the true joints
    let mut targets = JointTargets::from_joints(gt_mesh.joints_3d, &camera);
    targets.joints_3d = noisy;
    targets.translation_target =
        noisy[crate::kinematics::LEFT_WRIST] - noisy[crate::kinematics::RIGHT_WRIST];

    Ok(Scene {
        gt_params: gt,
        initial_params: initial,
        targets,
        spec: *spec,
    })
}

// ───────────────────────── batch experiments ─────────────────────────

/// Scene population for an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub scene_count: usize,
    pub base_seed: u64,
    /// Presets cycled over the scenes.
    pub presets: Vec<InteractionPreset>,
    pub perturbation: PerturbationScales,
    pub joint_noise_std_mm: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            scene_count: 50,
            base_seed: 1,
            presets: vec![InteractionPreset::Clasp, InteractionPreset::Interlace],
            perturbation: PerturbationScales::default(),
            joint_noise_std_mm: 10.0,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scene_count == 0 {
            return Err(Error::InvalidConfig("corpus needs at least one scene".into()));
        }
        if self.presets.is_empty() {
            return Err(Error::InvalidConfig("corpus needs at least one preset".into()));
        }
        self.perturbation.validate()?;
        if !(self.joint_noise_std_mm.is_finite() && self.joint_noise_std_mm >= 0.0) {
            return Err(Error::InvalidConfig("joint noise std must be non-negative".into()));
        }
        Ok(())
    }

    pub fn scene_spec(&self, index: usize) -> SceneSpec {
        SceneSpec {
            seed: self.base_seed.wrapping_add(index as u64),
            preset: self.presets[index % self.presets.len()],
            perturbation: self.perturbation,
            joint_noise_std_mm: self.joint_noise_std_mm,
        }
    }
}

/// Metrics of one parameter state against the scene's ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub mpjpe_mm: f64,
    pub i_mpjpe_mm: f64,
    pub ave_p_mm: f64,
    pub max_p_mm: f64,
}

/// Evaluate a parameter state against a scene's ground truth.
pub fn evaluate_against_gt(
    params: &TwoHandParams,
    gt_params: &TwoHandParams,
    template: &HandTemplate,
    grid: &crate::sdf::GridConfig,
) -> Result<SceneMetrics> {
    let mesh = forward(template, params)?;
    let gt_mesh = forward(template, gt_params)?;
    let valid = [true; TOTAL_KEYPOINTS];
    let pen = penetration_metrics(&mesh, grid)?;
    Ok(SceneMetrics {
        mpjpe_mm: mpjpe_mm(&mesh.joints_3d, &gt_mesh.joints_3d, &valid)?,
        i_mpjpe_mm: i_mpjpe_mm(&mesh.joints_3d, &gt_mesh.joints_3d, &valid)?,
        ave_p_mm: pen.ave_p_mm,
        max_p_mm: pen.max_p_mm,
    })
}

/// One refined scene with its before/after evaluation.
#[derive(Clone, Debug)]
pub struct SceneOutcome {
    pub scene: Scene,
    pub refined_params: TwoHandParams,
    pub report: RefineReport,
    pub initial: SceneMetrics,
    pub refined: SceneMetrics,
}

/// Refine one scene and evaluate it against its ground truth.
pub fn run_scene(
    scene: &Scene,
    config: &RefineConfig,
    template: &HandTemplate,
) -> Result<SceneOutcome> {
    let (refined_params, report) =
        factorized_refine(&scene.initial_params, &scene.targets, template, config)?;
    let initial = evaluate_against_gt(&scene.initial_params, &scene.gt_params, template, &config.grid)?;
    let refined = evaluate_against_gt(&refined_params, &scene.gt_params, template, &config.grid)?;
    Ok(SceneOutcome {
        scene: scene.clone(),
        refined_params,
        report,
        initial,
        refined,
    })
}

/// Aggregate means over a corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub mpjpe_mm: f64,
    pub i_mpjpe_mm: f64,
    pub ave_p_mm: f64,
    pub max_p_mm: f64,
}

fn mean_of(metrics: impl Iterator<Item = SceneMetrics> + Clone, n: usize) -> MetricMeans {
    let mut m = MetricMeans::default();
    if n == 0 {
        return m;
    }
    for s in metrics {
        m.mpjpe_mm += s.mpjpe_mm;
        m.i_mpjpe_mm += s.i_mpjpe_mm;
        m.ave_p_mm += s.ave_p_mm;
        m.max_p_mm += s.max_p_mm;
    }
    let n = n as f64;
    m.mpjpe_mm /= n;
    m.i_mpjpe_mm /= n;
    m.ave_p_mm /= n;
    m.max_p_mm /= n;
    m
}

/// One aggregate row of an experiment report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub label: String,
    pub joint_noise_std_mm: f64,
    pub scene_count: usize,
    pub generation_failures: usize,
    pub initial: MetricMeans,
    pub refined: MetricMeans,
    pub accepted_stages: usize,
}

/// A full experiment report (one row per noise level when sweeping).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub rows: Vec<CorpusRow>,
}

/// Generate and refine a corpus, returning the per-scene outcomes and
/// the aggregate row. Scenes run in parallel; results are ordered and
/// bit-reproducible for a fixed spec and config.
pub fn run_experiment_detailed(
    corpus: &CorpusSpec,
    config: &RefineConfig,
    template: &HandTemplate,
) -> Result<(Vec<SceneOutcome>, CorpusRow)> {
    corpus.validate()?;
    config.validate()?;
    let results: Vec<Result<Option<SceneOutcome>>> = (0..corpus.scene_count)
        .into_par_iter()
        .map(|i| {
            let spec = corpus.scene_spec(i);
            match generate_scene(&spec, template) {
                Ok(scene) => run_scene(&scene, config, template).map(Some),
                Err(Error::GenerationFailure(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut outcomes = Vec::with_capacity(corpus.scene_count);
    let mut failures = 0usize;
    for r in results {
        match r? {
            Some(o) => outcomes.push(o),
            None => failures += 1,
        }
    }
    let n = outcomes.len();
    let row = CorpusRow {
        label: corpus
            .presets
            .iter()
            .map(|p| p.name())
            .collect::<Vec<_>>()
            .join("+"),
        joint_noise_std_mm: corpus.joint_noise_std_mm,
        scene_count: n,
        generation_failures: failures,
        initial: mean_of(outcomes.iter().map(|o| o.initial), n),
        refined: mean_of(outcomes.iter().map(|o| o.refined), n),
        accepted_stages: outcomes.iter().map(|o| o.report.accepted_stages).sum(),
    };
    Ok((outcomes, row))
}

/// Aggregate-only experiment run.
pub fn run_experiment(
    corpus: &CorpusSpec,
    config: &RefineConfig,
    template: &HandTemplate,
) -> Result<CorpusReport> {
    let (_, row) = run_experiment_detailed(corpus, config, template)?;
    Ok(CorpusReport { rows: vec![row] })
}

/// Noise-robustness sweep: the same corpus refined once per noise
/// level, one report row each. Scene seeds are shared across levels so
/// rows differ only in the target noise.
pub fn run_noise_sweep(
    corpus: &CorpusSpec,
    levels_mm: &[f64],
    config: &RefineConfig,
    template: &HandTemplate,
) -> Result<CorpusReport> {
    let mut rows = Vec::with_capacity(levels_mm.len());
    for &std in levels_mm {
        let mut c = corpus.clone();
        c.joint_noise_std_mm = std;
        let (_, row) = run_experiment_detailed(&c, config, template)?;
        rows.push(row);
    }
    Ok(CorpusReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdf::GridConfig;
    use crate::template::{build_template, TemplateConfig};

    fn template() -> HandTemplate {
        build_template(&TemplateConfig::default()).unwrap()
    }

    fn spec(seed: u64, preset: InteractionPreset) -> SceneSpec {
        SceneSpec {
            seed,
            preset,
            perturbation: PerturbationScales::default(),
            joint_noise_std_mm: 10.0,
        }
    }

    #[test]
    fn zero_perturbation_and_noise_reproduce_gt() {
        let t = template();
        let s = SceneSpec {
            seed: 3,
            preset: InteractionPreset::Clasp,
            perturbation: PerturbationScales {
                translation_m: 0.0,
                orientation_rad: 0.0,
                fingers_rad: 0.0,
                shape: 0.0,
            },
            joint_noise_std_mm: 0.0,
        };
        let scene = generate_scene(&s, &t).unwrap();
        assert_eq!(scene.initial_params, scene.gt_params);
        let mesh = forward(&t, &scene.gt_params).unwrap();
        for (a, b) in scene.targets.joints_3d.iter().zip(&mesh.joints_3d) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let t = template();
        let s = spec(42, InteractionPreset::Interlace);
        let a = generate_scene(&s, &t).unwrap();
        let b = generate_scene(&s, &t).unwrap();
        assert_eq!(a.gt_params, b.gt_params);
        assert_eq!(a.initial_params, b.initial_params);
        assert_eq!(a.targets, b.targets);
    }

    #[test]
    fn gt_satisfies_penetration_bound() {
        let t = template();
        let grid = GridConfig::default();
        for preset in InteractionPreset::ALL {
            for seed in 0..8 {
                let scene = generate_scene(&spec(seed, preset), &t).unwrap();
                let mesh = forward(&t, &scene.gt_params).unwrap();
                let pen = penetration_metrics(&mesh, &grid).unwrap();
                assert!(
                    pen.ave_p_mm <= GT_AVE_P_LIMIT_MM,
                    "{} seed {seed}: gt ave-p {}",
                    preset.name(),
                    pen.ave_p_mm
                );
            }
        }
    }

    #[test]
    fn clasp_translation_perturbation_collides() {
        let t = template();
        let grid = GridConfig::default();
        let scene = generate_scene(&spec(7, InteractionPreset::Clasp), &t).unwrap();
        let mesh = forward(&t, &scene.initial_params).unwrap();
        let pen = penetration_metrics(&mesh, &grid).unwrap();
        assert!(pen.ave_p_mm > 0.0, "initial ave-p {}", pen.ave_p_mm);
    }

    #[test]
    fn noise_magnitude_matches_declared_std() {
        let t = template();
        let mut sq_sum = 0.0;
        let mut n = 0usize;
        for seed in 0..30 {
            let s = spec(seed, InteractionPreset::Clasp);
            let scene = generate_scene(&s, &t).unwrap();
            let mesh = forward(&t, &scene.gt_params).unwrap();
            for (a, b) in scene.targets.joints_3d.iter().zip(&mesh.joints_3d) {
                let d = a - b;
                for c in d.iter() {
                    sq_sum += c * c;
                    n += 1;
                }
            }
        }
        let sample_std_mm = (sq_sum / n as f64).sqrt() * 1000.0;
        assert!(
            (sample_std_mm - 10.0).abs() < 1.5,
            "sample std {sample_std_mm} vs declared 10"
        );
    }

    #[test]
    fn corpus_runs_are_reproducible() {
        let t = template();
        let corpus = CorpusSpec {
            scene_count: 3,
            base_seed: 11,
            presets: vec![InteractionPreset::Clasp],
            perturbation: PerturbationScales::default(),
            joint_noise_std_mm: 5.0,
        };
        let mut config = RefineConfig::default();
        for w in config.stages.iter_mut() {
            w.max_iterations = 3;
        }
        let a = run_experiment(&corpus, &config, &t).unwrap();
        let b = run_experiment(&corpus, &config, &t).unwrap();
        assert_eq!(a, b);
    }
}
