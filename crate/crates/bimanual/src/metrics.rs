//! Pose and vertex evaluation metrics.
//!
//! * `mpjpe` — per-hand wrist-anchored mean joint error: each hand's
//!   predicted joints are translated so its wrist matches the
//!   ground-truth wrist, then the mean Euclidean error over valid
//!   joints of both hands is taken.
//! * `i_mpjpe` — both hands aligned together by the least-squares
//!   similarity WITHOUT rotation (one shared scale plus translation);
//!   rotation errors remain visible by design.
//! * `mpvpe` / `i_mpvpe` — the same two alignments applied to mesh
//!   vertices (wrists taken from the keypoint regressor).
//! * `classify_interaction` — the interacting (> 30 valid joints) and
//!   closely-interacting (mean nearest inter-hand joint distance
//!   < 40 mm) scene classes.
//!
//! All reported values are millimeters; internal math stays in meters.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kinematics::{regress_hand_joints, TwoHandMesh, LEFT_WRIST, RIGHT_WRIST, TOTAL_KEYPOINTS};
use crate::template::{HandTemplate, KEYPOINT_COUNT};
use crate::Result;

/// Result of the scale+translation alignment. Rotation is deliberately
/// not part of this alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentResult {
    pub scale: f64,
    pub translation: Vector3<f64>,
    pub aligned: Vec<Point3<f64>>,
}

/// Least-squares similarity without rotation: the scale `s > 0` and
/// translation `t` minimizing `Σ ‖s·p_i + t − g_i‖²`.
///
/// Closed form: on mean-centered points `s* = Σ⟨p̂_i, ĝ_i⟩ / Σ‖p̂_i‖²`,
/// then `t* = ḡ − s·p̄`.
pub fn similarity_align_no_rotation(
    pred: &[Point3<f64>],
    gt: &[Point3<f64>],
) -> Result<AlignmentResult> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            field: "alignment point sets",
            expected: gt.len(),
            found: pred.len(),
        });
    }
    if pred.len() < 2 {
        return Err(Error::EmptyMetric(
            "similarity alignment needs at least 2 points".into(),
        ));
    }
    let n = pred.len() as f64;
    let pc = pred.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let gc = gt.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, g) in pred.iter().zip(gt) {
        let ph = p.coords - pc;
        let gh = g.coords - gc;
        num += ph.dot(&gh);
        den += ph.norm_squared();
    }
    if den <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "all prediction points coincide".into(),
        ));
    }
    let scale = num / den;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "similarity alignment produced non-positive scale {scale}"
        )));
    }
    let translation = gc - pc * scale;
    let aligned = pred
        .iter()
        .map(|p| Point3::from(p.coords * scale + translation))
        .collect();
    Ok(AlignmentResult {
        scale,
        translation,
        aligned,
    })
}

fn require_wrists(valid: &[bool; TOTAL_KEYPOINTS]) -> Result<()> {
    if !valid[LEFT_WRIST] || !valid[RIGHT_WRIST] {
        return Err(Error::InvalidInput("wrist joints must be valid".into()));
    }
    Ok(())
}

/// Wrist-anchored mean per-joint error, millimeters.
pub fn mpjpe_mm(
    pred: &[Point3<f64>; TOTAL_KEYPOINTS],
    gt: &[Point3<f64>; TOTAL_KEYPOINTS],
    valid: &[bool; TOTAL_KEYPOINTS],
) -> Result<f64> {
    require_wrists(valid)?;
    let left_shift = gt[LEFT_WRIST] - pred[LEFT_WRIST];
    let right_shift = gt[RIGHT_WRIST] - pred[RIGHT_WRIST];
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in 0..TOTAL_KEYPOINTS {
        if !valid[k] {
            continue;
        }
        let shift = if k < KEYPOINT_COUNT { left_shift } else { right_shift };
        sum += (pred[k] + shift - gt[k]).norm();
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyMetric("no valid joints".into()));
    }
    Ok(sum / count as f64 * 1000.0)
}

/// Jointly aligned (shared scale + translation) mean per-joint error,
/// millimeters.
pub fn i_mpjpe_mm(
    pred: &[Point3<f64>; TOTAL_KEYPOINTS],
    gt: &[Point3<f64>; TOTAL_KEYPOINTS],
    valid: &[bool; TOTAL_KEYPOINTS],
) -> Result<f64> {
    let mut p = Vec::new();
    let mut g = Vec::new();
    for k in 0..TOTAL_KEYPOINTS {
        if valid[k] {
            p.push(pred[k]);
            g.push(gt[k]);
        }
    }
    if p.len() < 2 {
        return Err(Error::EmptyMetric(
            "joint alignment needs at least 2 valid joints".into(),
        ));
    }
    let alignment = similarity_align_no_rotation(&p, &g)?;
    let mean: f64 = alignment
        .aligned
        .iter()
        .zip(&g)
        .map(|(a, b)| (a - b).norm())
        .sum::<f64>()
        / p.len() as f64;
    Ok(mean * 1000.0)
}

/// Wrist-anchored mean per-vertex error, millimeters. Wrists come from
/// the keypoint regressor applied to each vertex set.
pub fn mpvpe_mm(
    pred: &TwoHandMesh,
    gt: &TwoHandMesh,
    template: &HandTemplate,
) -> Result<f64> {
    let counts_match = pred.left_vertices.len() == gt.left_vertices.len()
        && pred.right_vertices.len() == gt.right_vertices.len();
    if !counts_match {
        return Err(Error::DimensionMismatch {
            field: "mesh vertex counts",
            expected: gt.left_vertices.len(),
            found: pred.left_vertices.len(),
        });
    }
    let pred_lw = regress_hand_joints(template, &pred.left_vertices)?[0];
    let pred_rw = regress_hand_joints(template, &pred.right_vertices)?[0];
    let gt_lw = regress_hand_joints(template, &gt.left_vertices)?[0];
    let gt_rw = regress_hand_joints(template, &gt.right_vertices)?[0];
    let left_shift = gt_lw - pred_lw;
    let right_shift = gt_rw - pred_rw;
    let mut sum = 0.0;
    for (p, g) in pred.left_vertices.iter().zip(&gt.left_vertices) {
        sum += (p + left_shift - g).norm();
    }
    for (p, g) in pred.right_vertices.iter().zip(&gt.right_vertices) {
        sum += (p + right_shift - g).norm();
    }
    let count = pred.left_vertices.len() + pred.right_vertices.len();
    Ok(sum / count as f64 * 1000.0)
}

/// Jointly aligned mean per-vertex error, millimeters.
pub fn i_mpvpe_mm(pred: &TwoHandMesh, gt: &TwoHandMesh) -> Result<f64> {
    let counts_match = pred.left_vertices.len() == gt.left_vertices.len()
        && pred.right_vertices.len() == gt.right_vertices.len();
    if !counts_match {
        return Err(Error::DimensionMismatch {
            field: "mesh vertex counts",
            expected: gt.left_vertices.len(),
            found: pred.left_vertices.len(),
        });
    }
    let p: Vec<Point3<f64>> = pred
        .left_vertices
        .iter()
        .chain(&pred.right_vertices)
        .cloned()
        .collect();
    let g: Vec<Point3<f64>> = gt
        .left_vertices
        .iter()
        .chain(&gt.right_vertices)
        .cloned()
        .collect();
    let alignment = similarity_align_no_rotation(&p, &g)?;
    let mean: f64 = alignment
        .aligned
        .iter()
        .zip(&g)
        .map(|(a, b)| (a - b).norm())
        .sum::<f64>()
        / p.len() as f64;
    Ok(mean * 1000.0)
}

/// Scene interaction classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionClass {
    Single,
    Interacting,
    CloselyInteracting,
}

/// Threshold on the number of valid joints for the interacting class.
pub const INTERACTING_MIN_VALID: usize = 30;
/// Threshold on the mean nearest inter-hand joint distance for the
/// closely-interacting class, meters.
pub const CLOSE_INTERACTION_DISTANCE_M: f64 = 0.040;

/// Classify a scene from its ground-truth joints: interacting when more
/// than 30 joints are valid, closely interacting when additionally the
/// mean nearest-neighbor distance to the other hand's valid joints is
/// below 40 mm.
pub fn classify_interaction(
    gt: &[Point3<f64>; TOTAL_KEYPOINTS],
    valid: &[bool; TOTAL_KEYPOINTS],
) -> InteractionClass {
    let count = valid.iter().filter(|v| **v).count();
    if count <= INTERACTING_MIN_VALID {
        return InteractionClass::Single;
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for k in 0..TOTAL_KEYPOINTS {
        if !valid[k] {
            continue;
        }
        let other = if k < KEYPOINT_COUNT {
            KEYPOINT_COUNT..TOTAL_KEYPOINTS
        } else {
            0..KEYPOINT_COUNT
        };
        let mut nearest = f64::INFINITY;
        for j in other {
            if valid[j] {
                nearest = nearest.min((gt[k] - gt[j]).norm());
            }
        }
        if nearest.is_finite() {
            sum += nearest;
            n += 1;
        }
    }
    if n > 0 && (sum / n as f64) < CLOSE_INTERACTION_DISTANCE_M {
        InteractionClass::CloselyInteracting
    } else {
        InteractionClass::Interacting
    }
}
