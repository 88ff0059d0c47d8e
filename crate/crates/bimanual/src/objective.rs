//! Objective terms for supervision and refinement.
//!
//! Six terms make up the refinement objective, each scaled by a
//! per-stage weight:
//!
//! * collision — the inter-hand penetration energy (meters);
//! * 2D joints — L1 distance of projected keypoints to target pixels,
//!   masked by visibility;
//! * 3D joints — summed squared distance to target keypoints (m²);
//! * translation — squared distance of the translation parameter to the
//!   wrist-difference target;
//! * shape regularity — squared difference between the two hands' shape
//!   coefficients;
//! * finger — a planarity/curl penalty that discourages twisted fingers.
//!
//! Sums run over joints/coefficients (never means) so weights keep a
//! fixed relative meaning.
//!
//! Gradients treat the collision grids as frozen snapshots: the grids
//! are rebuilt whenever geometry moves, but differentiation flows only
//! through the trilinear sample positions. Finite-difference checks
//! therefore compare against [`ObjectiveContext::evaluate_with_grids`]
//! on the same grids.

use nalgebra::{Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::WeakPerspectiveCamera;
use crate::collision::{collision_loss_with_grids, CollisionGrids};
use crate::error::Error;
use crate::kinematics::{forward_cached, ForwardCache, TwoHandMesh, TOTAL_KEYPOINTS};
use crate::params::{Factor, FingerPose, HandShape, ParamDelta, TwoHandParams};
use crate::rotation::rodrigues;
use crate::sdf::GridConfig;
use crate::template::{HandTemplate, FINGER_COUNT, KEYPOINT_COUNT};
use crate::Result;

/// Pseudo-ground-truth targets the refinement pulls toward.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTargets {
    /// Target 3D keypoints (left 21 then right 21), meters.
    pub joints_3d: [Point3<f64>; TOTAL_KEYPOINTS],
    /// Target 2D keypoints, pixels.
    pub joints_2d: [Vector2<f64>; TOTAL_KEYPOINTS],
    pub visibility: [bool; TOTAL_KEYPOINTS],
    /// Right-to-left translation target (left wrist − right wrist), meters.
    pub translation_target: Vector3<f64>,
}

impl JointTargets {
    /// Build targets from clean keypoints: everything visible, 2D by
    /// projection, translation from the wrist difference.
    pub fn from_joints(
        joints_3d: [Point3<f64>; TOTAL_KEYPOINTS],
        camera: &WeakPerspectiveCamera,
    ) -> Self {
        let mut joints_2d = [Vector2::zeros(); TOTAL_KEYPOINTS];
        for (k, j) in joints_3d.iter().enumerate() {
            joints_2d[k] = camera.project(j);
        }
        let translation_target =
            joints_3d[crate::kinematics::LEFT_WRIST] - joints_3d[crate::kinematics::RIGHT_WRIST];
        Self {
            joints_3d,
            joints_2d,
            visibility: [true; TOTAL_KEYPOINTS],
            translation_target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite3 = self
            .joints_3d
            .iter()
            .all(|j| j.coords.iter().all(|c| c.is_finite()));
        let finite2 = self
            .joints_2d
            .iter()
            .all(|j| j.iter().all(|c| c.is_finite()));
        if !finite3 || !finite2 || !self.translation_target.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("joint targets".into()));
        }
        if self.visibility[crate::kinematics::LEFT_WRIST]
            && self.visibility[crate::kinematics::RIGHT_WRIST]
        {
            let expected = self.joints_3d[crate::kinematics::LEFT_WRIST]
                - self.joints_3d[crate::kinematics::RIGHT_WRIST];
            if (expected - self.translation_target).norm() > 1e-9 {
                return Err(Error::InvalidInput(
                    "translation_target does not match wrist difference".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Per-stage term weights plus the descent step size and iteration
/// budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub collision: f64,
    pub joints_2d: f64,
    pub joints_3d: f64,
    pub translation: f64,
    pub shape_reg: f64,
    pub finger: f64,
    /// Descent step size γ.
    pub step_size: f64,
    pub max_iterations: usize,
}

impl ObjectiveWeights {
    /// Stage defaults: step size 1e-4 for the translation stage and
    /// 1e-2 otherwise; collision weight 0.1 for translation and 1.0
    /// otherwise; finger weight 1e5 on the finger stage only; joint
    /// weights 10 (2D) and 1e3 (3D); translation 1e3; shape regularity
    /// 0.1. 50 iterations per stage, except 200 for the translation
    /// stage whose step size is two orders smaller.
    pub fn stage_defaults(factor: Factor) -> Self {
        let mut w = Self {
            collision: 1.0,
            joints_2d: 1e1,
            joints_3d: 1e3,
            translation: 1e3,
            shape_reg: 1e-1,
            finger: 0.0,
            step_size: 1e-2,
            max_iterations: 50,
        };
        match factor {
            Factor::Translation => {
                w.collision = 1e-1;
                w.step_size = 1e-4;
                // the small translation step needs a longer run to cover
                // realistic location errors
                w.max_iterations = 200;
            }
            Factor::Fingers => {
                w.finger = 1e5;
            }
            _ => {}
        }
        w
    }

    pub fn validate(&self) -> Result<()> {
        let terms = [
            self.collision,
            self.joints_2d,
            self.joints_3d,
            self.translation,
            self.shape_reg,
            self.finger,
        ];
        if terms.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(
                "objective weights must be non-negative".into(),
            ));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidConfig("step size must be positive".into()));
        }
        Ok(())
    }
}

/// Weighted value of each objective term; the objective is their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TermBreakdown {
    pub collision: f64,
    pub joints_2d: f64,
    pub joints_3d: f64,
    pub translation: f64,
    pub shape_reg: f64,
    pub finger: f64,
}

impl TermBreakdown {
    pub fn total(&self) -> f64 {
        self.collision
            + self.joints_2d
            + self.joints_3d
            + self.translation
            + self.shape_reg
            + self.finger
    }
}

// ───────────────────────── finger constraint ─────────────────────────

/// Planarity/curl diagnostics for one finger chain (tip → palm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FingerConstraint {
    /// Coplanarity: (v_ab × v_bc) · v_cd; zero for a planar finger.
    pub c1: f64,
    /// Curl consistency: (v_ab × v_bc) · (v_bc × v_cd); negative when
    /// consecutive bends disagree (a twisted finger).
    pub c2: f64,
    /// Penalty |c1| + max(−c2, 0); zero exactly for a planar finger
    /// curling in one direction.
    pub penalty: f64,
}

/// Evaluate the finger constraint on four chain points ordered tip,
/// distal knuckle, middle knuckle, base knuckle.
pub fn finger_constraint(points: &[Point3<f64>; 4]) -> FingerConstraint {
    let v_ab = points[1] - points[0];
    let v_bc = points[2] - points[1];
    let v_cd = points[3] - points[2];
    let u = v_ab.cross(&v_bc);
    let w = v_bc.cross(&v_cd);
    let c1 = u.dot(&v_cd);
    let c2 = u.dot(&w);
    FingerConstraint {
        c1,
        c2,
        penalty: c1.abs() + (-c2).max(0.0),
    }
}

fn finger_points(
    joints: &[Point3<f64>; TOTAL_KEYPOINTS],
    hand: usize,
    finger: usize,
) -> [Point3<f64>; 4] {
    let base = hand * KEYPOINT_COUNT;
    let k = HandTemplate::finger_joint_keypoints(finger);
    [
        joints[base + HandTemplate::fingertip_keypoint(finger)],
        joints[base + k[2]],
        joints[base + k[1]],
        joints[base + k[0]],
    ]
}

/// Total finger penalty over all ten fingers of the pair.
pub fn finger_penalty_total(joints: &[Point3<f64>; TOTAL_KEYPOINTS]) -> f64 {
    let mut total = 0.0;
    for hand in 0..2 {
        for finger in 0..FINGER_COUNT {
            total += finger_constraint(&finger_points(joints, hand, finger)).penalty;
        }
    }
    total
}

/// Accumulate d(penalty)/d(points) for one finger into the joint
/// cotangents.
fn finger_penalty_backward(
    joints: &[Point3<f64>; TOTAL_KEYPOINTS],
    hand: usize,
    finger: usize,
    weight: f64,
    joint_cot: &mut [Vector3<f64>; TOTAL_KEYPOINTS],
) {
    let pts = finger_points(joints, hand, finger);
    let v_ab = pts[1] - pts[0];
    let v_bc = pts[2] - pts[1];
    let v_cd = pts[3] - pts[2];
    let u = v_ab.cross(&v_bc);
    let w = v_bc.cross(&v_cd);
    let c1 = u.dot(&v_cd);
    let c2 = u.dot(&w);

    // gradients with respect to the three edge vectors
    let mut g_ab = Vector3::zeros();
    let mut g_bc = Vector3::zeros();
    let mut g_cd = Vector3::zeros();
    let s1 = if c1 > 0.0 {
        1.0
    } else if c1 < 0.0 {
        -1.0
    } else {
        0.0
    };
    if s1 != 0.0 {
        g_ab += v_bc.cross(&v_cd) * s1;
        g_bc += v_cd.cross(&v_ab) * s1;
        g_cd += u * s1;
    }
    if c2 < 0.0 {
        // d(−c2)/d(edges)
        g_ab -= v_bc.cross(&w);
        g_bc -= w.cross(&v_ab) + v_cd.cross(&u);
        g_cd -= u.cross(&v_bc);
    }

    let base = hand * KEYPOINT_COUNT;
    let k = HandTemplate::finger_joint_keypoints(finger);
    let ids = [
        base + HandTemplate::fingertip_keypoint(finger),
        base + k[2],
        base + k[1],
        base + k[0],
    ];
    // v_ab = p1 − p0, v_bc = p2 − p1, v_cd = p3 − p2
    joint_cot[ids[0]] -= g_ab * weight;
    joint_cot[ids[1]] += (g_ab - g_bc) * weight;
    joint_cot[ids[2]] += (g_bc - g_cd) * weight;
    joint_cot[ids[3]] += g_cd * weight;
}

// ───────────────────────── supervised losses ─────────────────────────

/// Ground-truth annotations for the supervised evaluators. Absent
/// fields make the evaluator fail with a named error.
#[derive(Clone, Debug, Default)]
pub struct GtAnnotations {
    pub shapes: Option<(HandShape, HandShape)>,
    pub fingers: Option<(FingerPose, FingerPose)>,
    pub translation: Option<Vector3<f64>>,
    pub joints_3d: Option<[Point3<f64>; TOTAL_KEYPOINTS]>,
    pub joints_2d: Option<([Vector2<f64>; TOTAL_KEYPOINTS], [bool; TOTAL_KEYPOINTS])>,
}

/// Unweighted supervised loss terms and their weighted total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupervisedLosses {
    /// Shape + finger-rotation parameter loss (rotations compared as
    /// matrices for numerical stability).
    pub param_term: f64,
    pub joints_3d_term: f64,
    pub translation_term: f64,
    pub shape_reg_term: f64,
    pub joints_2d_term: f64,
    pub total: f64,
}

/// Weights of the supervised total, in term order: parameters,
/// translation, 3D joints, shape regularity, 2D joints.
pub const SUPERVISED_LAMBDAS: [f64; 5] = [10.0, 10.0, 10.0, 0.1, 10.0];

/// Evaluate the supervised losses of a prediction against annotations.
pub fn supervised_losses(
    pred_params: &TwoHandParams,
    pred_mesh: &TwoHandMesh,
    camera: &WeakPerspectiveCamera,
    gt: &GtAnnotations,
) -> Result<SupervisedLosses> {
    let (gt_shape_l, gt_shape_r) = gt
        .shapes
        .as_ref()
        .ok_or_else(|| Error::MissingField("gt.shapes".into()))?;
    let (gt_fingers_l, gt_fingers_r) = gt
        .fingers
        .as_ref()
        .ok_or_else(|| Error::MissingField("gt.fingers".into()))?;
    let gt_translation = gt
        .translation
        .ok_or_else(|| Error::MissingField("gt.translation".into()))?;
    let gt_joints = gt
        .joints_3d
        .ok_or_else(|| Error::MissingField("gt.joints_3d".into()))?;
    let (gt_2d, visibility) = gt
        .joints_2d
        .ok_or_else(|| Error::MissingField("gt.joints_2d".into()))?;

    let mut param_term = 0.0;
    for (a, b) in gt_shape_l
        .coefficients
        .iter()
        .zip(&pred_params.left_shape.coefficients)
        .chain(
            gt_shape_r
                .coefficients
                .iter()
                .zip(&pred_params.right_shape.coefficients),
        )
    {
        param_term += (a - b) * (a - b);
    }
    for (ga, pa) in gt_fingers_l
        .joint_rotations
        .iter()
        .zip(&pred_params.left_fingers.joint_rotations)
        .chain(
            gt_fingers_r
                .joint_rotations
                .iter()
                .zip(&pred_params.right_fingers.joint_rotations),
        )
    {
        let d = rodrigues(ga) - rodrigues(pa);
        param_term += d.norm_squared();
    }

    let mut joints_3d_term = 0.0;
    for (g, p) in gt_joints.iter().zip(&pred_mesh.joints_3d) {
        joints_3d_term += (g - p).norm_squared();
    }

    let translation_term = (gt_translation - pred_params.translation).norm_squared();

    let shape_reg_term: f64 = pred_params
        .left_shape
        .coefficients
        .iter()
        .zip(&pred_params.right_shape.coefficients)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();

    let mut joints_2d_term = 0.0;
    for k in 0..TOTAL_KEYPOINTS {
        if visibility[k] {
            let p = camera.project(&pred_mesh.joints_3d[k]);
            let d = gt_2d[k] - p;
            joints_2d_term += d.x.abs() + d.y.abs();
        }
    }

    let [l1, l2, l3, l4, l5] = SUPERVISED_LAMBDAS;
    let total = l1 * param_term
        + l2 * translation_term
        + l3 * joints_3d_term
        + l4 * shape_reg_term
        + l5 * joints_2d_term;
    Ok(SupervisedLosses {
        param_term,
        joints_3d_term,
        translation_term,
        shape_reg_term,
        joints_2d_term,
        total,
    })
}

// ──────────────────────── refinement objective ────────────────────────

/// Everything needed to evaluate and differentiate the refinement
/// objective for one scene and stage.
pub struct ObjectiveContext<'a> {
    pub template: &'a HandTemplate,
    pub targets: &'a JointTargets,
    pub weights: ObjectiveWeights,
    pub grid: GridConfig,
    pub camera: WeakPerspectiveCamera,
}

impl<'a> ObjectiveContext<'a> {
    pub fn new(
        template: &'a HandTemplate,
        targets: &'a JointTargets,
        weights: ObjectiveWeights,
        grid: GridConfig,
        camera: WeakPerspectiveCamera,
    ) -> Self {
        Self {
            template,
            targets,
            weights,
            grid,
            camera,
        }
    }

    /// Collision grids for a posed mesh. `None` when the collision
    /// weight is zero (the term is skipped entirely).
    pub fn grids_for_mesh(&self, mesh: &TwoHandMesh) -> Result<Option<CollisionGrids>> {
        if self.weights.collision == 0.0 {
            return Ok(None);
        }
        Ok(Some(CollisionGrids::build(mesh, &self.grid)?))
    }

    /// Evaluate with freshly built grids.
    pub fn evaluate(&self, params: &TwoHandParams) -> Result<(f64, TermBreakdown)> {
        let (mesh, _) = forward_cached(self.template, params)?;
        let grids = self.grids_for_mesh(&mesh)?;
        let breakdown = self.terms(params, &mesh, grids.as_ref())?;
        Ok((breakdown.total(), breakdown))
    }

    /// Evaluate against existing grids — the differentiable closure the
    /// gradient is defined on.
    pub fn evaluate_with_grids(
        &self,
        params: &TwoHandParams,
        grids: Option<&CollisionGrids>,
    ) -> Result<(f64, TermBreakdown)> {
        let (mesh, _) = forward_cached(self.template, params)?;
        let breakdown = self.terms(params, &mesh, grids)?;
        Ok((breakdown.total(), breakdown))
    }

    /// Gradient restricted to `factor` (all blocks when `None`), with
    /// grids built at the evaluation point and then held frozen.
    pub fn gradient(&self, params: &TwoHandParams, factor: Option<Factor>) -> Result<ParamDelta> {
        let (mesh, cache) = forward_cached(self.template, params)?;
        let grids = self.grids_for_mesh(&mesh)?;
        let (_, grad) =
            self.value_and_gradient_for(params, &mesh, &cache, grids.as_ref(), factor)?;
        Ok(grad)
    }

    /// Evaluation and gradient from an existing forward pass.
    pub fn value_and_gradient_for(
        &self,
        params: &TwoHandParams,
        mesh: &TwoHandMesh,
        cache: &ForwardCache,
        grids: Option<&CollisionGrids>,
        factor: Option<Factor>,
    ) -> Result<(TermBreakdown, ParamDelta)> {
        let breakdown = self.terms(params, mesh, grids)?;
        let w = &self.weights;
        let n = self.template.vertex_count();

        let mut left_cot = vec![Vector3::zeros(); n];
        let mut right_cot = vec![Vector3::zeros(); n];
        let mut joint_cot = [Vector3::zeros(); TOTAL_KEYPOINTS];

        if let Some(grids) = grids {
            if w.collision > 0.0 {
                for (i, v) in mesh.left_vertices.iter().enumerate() {
                    let (_, g) = grids.right.sample_with_gradient(v);
                    left_cot[i] += g * w.collision;
                }
                for (i, v) in mesh.right_vertices.iter().enumerate() {
                    let (_, g) = grids.left.sample_with_gradient(v);
                    right_cot[i] += g * w.collision;
                }
            }
        }

        if w.joints_3d > 0.0 {
            for k in 0..TOTAL_KEYPOINTS {
                let d = mesh.joints_3d[k] - self.targets.joints_3d[k];
                joint_cot[k] += d * (2.0 * w.joints_3d);
            }
        }

        if w.joints_2d > 0.0 {
            let s = self.camera.scale;
            let sgn = |v: f64| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            };
            for k in 0..TOTAL_KEYPOINTS {
                if self.targets.visibility[k] {
                    let p = self.camera.project(&mesh.joints_3d[k]);
                    let r = p - self.targets.joints_2d[k];
                    joint_cot[k].x += w.joints_2d * s * sgn(r.x);
                    joint_cot[k].y += w.joints_2d * s * sgn(r.y);
                }
            }
        }

        if w.finger > 0.0 {
            for hand in 0..2 {
                for finger in 0..FINGER_COUNT {
                    finger_penalty_backward(&mesh.joints_3d, hand, finger, w.finger, &mut joint_cot);
                }
            }
        }

        let mut grad = crate::kinematics::backward(
            self.template,
            params,
            cache,
            &left_cot,
            &right_cot,
            &joint_cot,
        );

        if w.translation > 0.0 {
            grad.translation +=
                (params.translation - self.targets.translation_target) * (2.0 * w.translation);
        }
        if w.shape_reg > 0.0 {
            for k in 0..crate::params::SHAPE_COEFFS {
                let d = params.left_shape.coefficients[k] - params.right_shape.coefficients[k];
                grad.left_shape[k] += 2.0 * w.shape_reg * d;
                grad.right_shape[k] -= 2.0 * w.shape_reg * d;
            }
        }

        if let Some(f) = factor {
            grad.restrict_to(f);
        }
        if !grad.is_finite() {
            return Err(Error::NonFinite("objective gradient".into()));
        }
        Ok((breakdown, grad))
    }

    fn terms(
        &self,
        params: &TwoHandParams,
        mesh: &TwoHandMesh,
        grids: Option<&CollisionGrids>,
    ) -> Result<TermBreakdown> {
        let w = &self.weights;
        let mut b = TermBreakdown::default();

        if w.collision > 0.0 {
            let grids = grids.ok_or_else(|| {
                Error::InvalidInput("collision weight is nonzero but no grids supplied".into())
            })?;
            b.collision = w.collision * collision_loss_with_grids(mesh, grids);
        }

        if w.joints_3d > 0.0 {
            let mut sum = 0.0;
            for k in 0..TOTAL_KEYPOINTS {
                sum += (mesh.joints_3d[k] - self.targets.joints_3d[k]).norm_squared();
            }
            b.joints_3d = w.joints_3d * sum;
        }

        if w.joints_2d > 0.0 {
            let mut sum = 0.0;
            for k in 0..TOTAL_KEYPOINTS {
                if self.targets.visibility[k] {
                    let p = self.camera.project(&mesh.joints_3d[k]);
                    let d = p - self.targets.joints_2d[k];
                    sum += d.x.abs() + d.y.abs();
                }
            }
            b.joints_2d = w.joints_2d * sum;
        }

        if w.translation > 0.0 {
            b.translation = w.translation
                * (params.translation - self.targets.translation_target).norm_squared();
        }

        if w.shape_reg > 0.0 {
            let sum: f64 = params
                .left_shape
                .coefficients
                .iter()
                .zip(&params.right_shape.coefficients)
                .map(|(a, c)| (a - c) * (a - c))
                .sum();
            b.shape_reg = w.shape_reg * sum;
        }

        if w.finger > 0.0 {
            b.finger = w.finger * finger_penalty_total(&mesh.joints_3d);
        }

        if !b.total().is_finite() {
            return Err(Error::NonFinite("objective value".into()));
        }
        Ok(b)
    }
}
