//! Factorized refinement with verification.
//!
//! One parameter factor (translation, orientation, fingers, shape) is
//! refined at a time while the others stay frozen. After each stage the
//! candidate is verified: it is accepted only if it strictly decreases
//! BOTH running errors — the collision energy `e_col` and the squared
//! 3D-joint error `e_3d` against the pseudo-ground-truth targets —
//! otherwise the previous parameters are kept. The conjunction makes the
//! whole pipeline never-worse by construction: whatever the stages
//! propose, the final errors are elementwise ≤ the initial ones.
//!
//! The default stage implementation runs Adam over the active factor's
//! coordinates. Collision grids are rebuilt every iteration for any
//! hand whose geometry moved (in the translation stage the right hand
//! is static and its grid is reused) and treated as frozen snapshots by
//! the gradient. Alternative per-factor refiners (e.g. learned
//! regressors) plug in through [`StageModule`]; verification applies to
//! them identically.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::camera::WeakPerspectiveCamera;
use crate::collision::{collision_loss_with_grids, CollisionGrids};
use crate::error::Error;
use crate::kinematics::{forward_cached, TOTAL_KEYPOINTS};
use crate::objective::{JointTargets, ObjectiveContext, ObjectiveWeights};
use crate::params::{Factor, TwoHandParams};
use crate::sdf::{GridConfig, VoxelSdf};
use crate::template::HandTemplate;
use crate::Result;

/// The two verification errors of a candidate state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    /// Collision energy, meters.
    pub e_col: f64,
    /// Summed squared 3D joint error, m².
    pub e_3d: f64,
}

impl ErrorPair {
    /// Elementwise strict improvement over `other`.
    pub fn strictly_better_than(&self, other: &ErrorPair) -> bool {
        self.e_col < other.e_col && self.e_3d < other.e_3d
    }

    /// Elementwise `≤` comparison.
    pub fn never_worse_than(&self, other: &ErrorPair) -> bool {
        self.e_col <= other.e_col && self.e_3d <= other.e_3d
    }
}

/// Verification errors of a parameter state: collision energy of the
/// posed pair plus the squared joint error against the targets.
pub fn obtain_error(
    params: &TwoHandParams,
    targets: &JointTargets,
    template: &HandTemplate,
    grid: &GridConfig,
) -> Result<ErrorPair> {
    let (mesh, _) = forward_cached(template, params)?;
    let grids = CollisionGrids::build(&mesh, grid)?;
    let e_col = collision_loss_with_grids(&mesh, &grids);
    let mut e_3d = 0.0;
    for k in 0..TOTAL_KEYPOINTS {
        e_3d += (mesh.joints_3d[k] - targets.joints_3d[k]).norm_squared();
    }
    Ok(ErrorPair { e_col, e_3d })
}

/// Refinement configuration: stage order, per-stage weights, grid and
/// camera conventions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// Stages to run, in order. Duplicates are rejected; subsets are
    /// allowed (single-factor ablations).
    pub stage_order: Vec<Factor>,
    /// Per-factor stage settings, indexed by [`Factor::index`].
    pub stages: [ObjectiveWeights; 4],
    pub grid: GridConfig,
    pub camera: WeakPerspectiveCamera,
    /// Ablation flag: refine all factors together in a single verified
    /// stage instead of factor by factor.
    pub joint_refinement: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            stage_order: vec![
                Factor::Translation,
                Factor::Orientation,
                Factor::Fingers,
                Factor::Shape,
            ],
            stages: [
                ObjectiveWeights::stage_defaults(Factor::Translation),
                ObjectiveWeights::stage_defaults(Factor::Orientation),
                ObjectiveWeights::stage_defaults(Factor::Fingers),
                ObjectiveWeights::stage_defaults(Factor::Shape),
            ],
            grid: GridConfig::default(),
            camera: default_camera(),
            joint_refinement: false,
        }
    }
}

/// Camera convention shared by the synthetic scenes: 1000 px/m centered
/// on a nominal 224×224 crop.
pub fn default_camera() -> WeakPerspectiveCamera {
    WeakPerspectiveCamera {
        scale: 1000.0,
        translation_2d: nalgebra::Vector2::new(112.0, 112.0),
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stage_order.is_empty() {
            return Err(Error::InvalidConfig("stage order is empty".into()));
        }
        let mut seen = [false; 4];
        for f in &self.stage_order {
            if seen[f.index()] {
                return Err(Error::InvalidConfig(format!(
                    "factor {f} appears twice in the stage order"
                )));
            }
            seen[f.index()] = true;
        }
        for w in &self.stages {
            w.validate()?;
        }
        self.grid.validate()?;
        self.camera.validate()?;
        Ok(())
    }

    pub fn stage_weights(&self, factor: Factor) -> &ObjectiveWeights {
        &self.stages[factor.index()]
    }
}

/// Context handed to stage modules.
pub struct StageContext<'a> {
    pub template: &'a HandTemplate,
    pub targets: &'a JointTargets,
    pub weights: &'a ObjectiveWeights,
    pub grid: &'a GridConfig,
    pub camera: &'a WeakPerspectiveCamera,
}

/// A pluggable per-factor refiner. Given the current parameters it
/// proposes a candidate with only the active factor replaced; the
/// engine then verifies the candidate.
pub trait StageModule: Send + Sync {
    fn name(&self) -> &'static str;
    fn propose(
        &self,
        factor: Factor,
        params: &TwoHandParams,
        ctx: &StageContext<'_>,
    ) -> Result<TwoHandParams>;
}

/// Default stage implementation: Adam on the active factor.
pub struct GradientDescentStage;

/// First/second moment decay and epsilon of the Adam update.
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl StageModule for GradientDescentStage {
    fn name(&self) -> &'static str {
        "gradient-descent"
    }

    fn propose(
        &self,
        factor: Factor,
        params: &TwoHandParams,
        ctx: &StageContext<'_>,
    ) -> Result<TwoHandParams> {
        refine_stage(
            params,
            factor,
            ctx.targets,
            ctx.template,
            ctx.weights,
            ctx.grid,
            ctx.camera,
        )
    }
}

/// Gradient descent with Adam over one factor, all other factors
/// frozen. The collision grids are rebuilt each iteration for the hands
/// whose geometry the factor moves. A non-finite objective or gradient
/// aborts the stage and returns the original parameters.
pub fn refine_stage(
    params: &TwoHandParams,
    factor: Factor,
    targets: &JointTargets,
    template: &HandTemplate,
    weights: &ObjectiveWeights,
    grid: &GridConfig,
    camera: &WeakPerspectiveCamera,
) -> Result<TwoHandParams> {
    let ctx = ObjectiveContext::new(template, targets, *weights, *grid, *camera);
    let mut current = params.clone();
    let dim = factor.dim();
    let mut coords = current.factor_coords(factor);
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];

    // In the translation stage the right hand never moves, so its grid
    // can be built once and reused.
    let static_right_grid: Option<VoxelSdf> = if factor == Factor::Translation
        && weights.collision > 0.0
    {
        let (mesh, _) = forward_cached(template, &current)?;
        Some(VoxelSdf::voxelize(&mesh.right_vertices, &mesh.faces, grid)?)
    } else {
        None
    };

    for t in 1..=weights.max_iterations {
        let (mesh, cache) = forward_cached(template, &current)?;
        let grids = if weights.collision == 0.0 {
            None
        } else if let Some(right) = &static_right_grid {
            Some(CollisionGrids {
                left: VoxelSdf::voxelize(&mesh.left_vertices, &mesh.faces, grid)?,
                right: right.clone(),
            })
        } else {
            Some(CollisionGrids::build(&mesh, grid)?)
        };
        let step = ctx.value_and_gradient_for(&current, &mesh, &cache, grids.as_ref(), Some(factor));
        let (breakdown, grad) = match step {
            Ok(ok) => ok,
            // mid-descent blowup: abort, hand back the original
            Err(Error::NonFinite(_)) => return Ok(params.clone()),
            Err(e) => return Err(e),
        };
        if !breakdown.total().is_finite() {
            return Ok(params.clone());
        }

        let g = grad.factor_coords(factor);
        let bc1 = 1.0 - ADAM_BETA1.powi(t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(t as i32);
        for i in 0..dim {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            coords[i] -= weights.step_size * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Ok(params.clone());
        }
        current.set_factor_coords(factor, &coords)?;
    }
    Ok(current)
}

/// Joint (non-factorized) descent used by the ablation flag: one Adam
/// run over all coordinates with each block stepped by its own stage
/// size, verified once at the end.
fn refine_all_factors(
    params: &TwoHandParams,
    config: &RefineConfig,
    targets: &JointTargets,
    template: &HandTemplate,
) -> Result<TwoHandParams> {
    let weights = *config.stage_weights(Factor::Fingers);
    let ctx = ObjectiveContext::new(template, targets, weights, config.grid, config.camera);
    let mut current = params.clone();
    let mut m = [const { Vec::new() }; 4];
    let mut v = [const { Vec::new() }; 4];
    for f in Factor::ALL {
        m[f.index()] = vec![0.0; f.dim()];
        v[f.index()] = vec![0.0; f.dim()];
    }

    for t in 1..=weights.max_iterations {
        let (mesh, cache) = forward_cached(template, &current)?;
        let grids = ctx.grids_for_mesh(&mesh)?;
        let step = ctx.value_and_gradient_for(&current, &mesh, &cache, grids.as_ref(), None);
        let (_, grad) = match step {
            Ok(ok) => ok,
            Err(Error::NonFinite(_)) => return Ok(params.clone()),
            Err(e) => return Err(e),
        };
        let bc1 = 1.0 - ADAM_BETA1.powi(t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(t as i32);
        for f in Factor::ALL {
            let gamma = config.stage_weights(f).step_size;
            let g = grad.factor_coords(f);
            let mut coords = current.factor_coords(f);
            let mf = &mut m[f.index()];
            let vf = &mut v[f.index()];
            for i in 0..f.dim() {
                mf[i] = ADAM_BETA1 * mf[i] + (1.0 - ADAM_BETA1) * g[i];
                vf[i] = ADAM_BETA2 * vf[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                coords[i] -= gamma * (mf[i] / bc1) / ((vf[i] / bc2).sqrt() + ADAM_EPS);
            }
            if coords.iter().any(|c| !c.is_finite()) {
                return Ok(params.clone());
            }
            current.set_factor_coords(f, &coords)?;
        }
    }
    Ok(current)
}

/// Outcome of one verified stage.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub factor: Factor,
    pub accepted: bool,
    /// Running best errors before the stage.
    pub before: ErrorPair,
    /// Errors of the proposed candidate.
    pub candidate: ErrorPair,
    /// Running best errors after the verification decision.
    pub after: ErrorPair,
    pub iterations: usize,
    /// Wall time of the stage, milliseconds (not deterministic).
    pub wall_time_ms: f64,
}

/// Full refinement trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefineReport {
    pub stages: Vec<StageRecord>,
    pub initial_errors: ErrorPair,
    pub final_errors: ErrorPair,
    pub accepted_stages: usize,
}

/// Per-factor registry of stage modules with verification around each
/// proposal.
pub struct RefineEngine {
    modules: [Box<dyn StageModule>; 4],
}

impl Default for RefineEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl RefineEngine {
    /// Engine with the gradient-descent stage bound to every factor.
    pub fn new() -> Self {
        Self {
            modules: [
                Box::new(GradientDescentStage),
                Box::new(GradientDescentStage),
                Box::new(GradientDescentStage),
                Box::new(GradientDescentStage),
            ],
        }
    }

    /// Replace the module for one factor. Replacing an existing
    /// non-default registration logs a warning.
    pub fn register_stage_module(&mut self, factor: Factor, module: Box<dyn StageModule>) {
        let old = self.modules[factor.index()].name();
        if old != GradientDescentStage.name() {
            log::warn!("replacing stage module '{old}' for factor {factor}");
        }
        self.modules[factor.index()] = module;
    }

    /// Run the verified stage loop.
    pub fn refine(
        &self,
        initial: &TwoHandParams,
        targets: &JointTargets,
        template: &HandTemplate,
        config: &RefineConfig,
    ) -> Result<(TwoHandParams, RefineReport)> {
        config.validate()?;
        targets.validate()?;
        initial.validate()?;

        let mut best = initial.clone();
        let mut best_errors = obtain_error(&best, targets, template, &config.grid)?;
        let initial_errors = best_errors;
        let mut stages = Vec::new();

        if config.joint_refinement {
            let started = Instant::now();
            let candidate = refine_all_factors(&best, config, targets, template)?;
            let candidate_errors = obtain_error(&candidate, targets, template, &config.grid)?;
            let accepted = candidate_errors.strictly_better_than(&best_errors);
            let before = best_errors;
            if accepted {
                best = candidate;
                best_errors = candidate_errors;
            }
            stages.push(StageRecord {
                factor: Factor::Fingers,
                accepted,
                before,
                candidate: candidate_errors,
                after: best_errors,
                iterations: config.stage_weights(Factor::Fingers).max_iterations,
                wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            });
        } else {
            for &factor in &config.stage_order {
                let weights = config.stage_weights(factor);
                let ctx = StageContext {
                    template,
                    targets,
                    weights,
                    grid: &config.grid,
                    camera: &config.camera,
                };
                let started = Instant::now();
                // a stage failure counts as a rejected stage
                let candidate = match self.modules[factor.index()].propose(factor, &best, &ctx) {
                    Ok(c) => c,
                    Err(_) => best.clone(),
                };
                let candidate_errors = obtain_error(&candidate, targets, template, &config.grid)?;
                let accepted = candidate_errors.strictly_better_than(&best_errors);
                let before = best_errors;
                if accepted {
                    best = candidate;
                    best_errors = candidate_errors;
                }
                stages.push(StageRecord {
                    factor,
                    accepted,
                    before,
                    candidate: candidate_errors,
                    after: best_errors,
                    iterations: weights.max_iterations,
                    wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
                });
            }
        }

        let accepted_stages = stages.iter().filter(|s| s.accepted).count();
        debug_assert!(best_errors.never_worse_than(&initial_errors));
        Ok((
            best,
            RefineReport {
                stages,
                initial_errors,
                final_errors: best_errors,
                accepted_stages,
            },
        ))
    }
}

/// Run the verified stage loop with the default gradient-descent
/// engine.
pub fn factorized_refine(
    initial: &TwoHandParams,
    targets: &JointTargets,
    template: &HandTemplate,
    config: &RefineConfig,
) -> Result<(TwoHandParams, RefineReport)> {
    RefineEngine::new().refine(initial, targets, template, config)
}
