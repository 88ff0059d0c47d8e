//! Forward kinematics with linear blend skinning, keypoint regression,
//! and analytic derivatives.
//!
//! Posing one hand:
//!
//! 1. shape coefficients displace rest vertices and joints through the
//!    template's linear shape basis;
//! 2. the wrist takes the global orientation, every articulated joint
//!    its axis-angle rotation, and world transforms chain down the tree;
//! 3. vertices blend the per-joint rigid transforms with the skinning
//!    weights. The right hand stays in the canonical frame, the left
//!    hand is additionally shifted by the right-to-left translation.
//!
//! The 42 keypoints (left 21 then right 21) are regressed from the posed
//! vertices. Because regressor rows average complete symmetric vertex
//! rings, the regressed keypoints coincide with the kinematic joint
//! positions for every pose and shape.
//!
//! The pose map is analytic in all parameters (Rodrigues' formula is
//! entire), so besides plain evaluation this module exposes exact
//! Jacobian-vector products ([`forward_jvp`]) and vector-Jacobian
//! products ([`backward`]) used by the optimizer. Only the axis-angle
//! *log* map has the usual chart singularity at angle π; tests steer
//! clear of it.

use nalgebra::{Matrix3, Point3, SMatrix, Vector3};

use crate::error::Error;
use crate::params::{ParamDelta, TwoHandParams, SHAPE_COEFFS};
use crate::rotation::{rodrigues, rodrigues_jacobian};
use crate::template::{HandTemplate, JOINT_COUNT, KEYPOINT_COUNT};
use crate::Result;

/// Total regressed keypoints for the pair.
pub const TOTAL_KEYPOINTS: usize = 2 * KEYPOINT_COUNT;
/// Keypoint index of the left wrist in the stacked set.
pub const LEFT_WRIST: usize = 0;
/// Keypoint index of the right wrist in the stacked set.
pub const RIGHT_WRIST: usize = KEYPOINT_COUNT;

/// Posed two-hand geometry.
#[derive(Clone, Debug)]
pub struct TwoHandMesh {
    pub left_vertices: Vec<Point3<f64>>,
    pub right_vertices: Vec<Point3<f64>>,
    /// Triangle list shared by both vertex sets.
    pub faces: Vec<[u32; 3]>,
    /// Regressed keypoints, left 21 then right 21, meters.
    pub joints_3d: [Point3<f64>; TOTAL_KEYPOINTS],
}

impl TwoHandMesh {
    pub fn validate(&self) -> Result<()> {
        let finite = |vs: &[Point3<f64>]| vs.iter().all(|v| v.coords.iter().all(|c| c.is_finite()));
        if !finite(&self.left_vertices) || !finite(&self.right_vertices) {
            return Err(Error::NonFinite("mesh vertices".into()));
        }
        if !self
            .joints_3d
            .iter()
            .all(|j| j.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite("mesh joints".into()));
        }
        Ok(())
    }
}

/// Rigid transform in (rotation, translation) form.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Affine {
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
}

impl Affine {
    fn identity() -> Self {
        Self {
            r: Matrix3::identity(),
            t: Vector3::zeros(),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.r * p + self.t
    }

    #[inline]
    fn compose(&self, other: &Affine) -> Affine {
        Affine {
            r: self.r * other.r,
            t: self.r * other.t + self.t,
        }
    }
}

/// Intermediate state of one posed hand, kept for derivative passes.
#[derive(Clone, Debug)]
pub(crate) struct HandCache {
    pub v_shaped: Vec<Vector3<f64>>,
    pub joints_shaped: [Vector3<f64>; JOINT_COUNT],
    pub local_rot: [Matrix3<f64>; JOINT_COUNT],
    pub world: [Affine; JOINT_COUNT],
    pub skin: [Affine; JOINT_COUNT],
}

/// Forward-pass state for both hands.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub(crate) left: HandCache,
    pub(crate) right: HandCache,
}

impl ForwardCache {
    /// Rigid skinning transform of one joint: a posed vertex is the
    /// weight-blended image of the shaped rest vertex under these.
    pub fn skin_transform(
        &self,
        side: crate::params::Side,
        joint: usize,
    ) -> (Matrix3<f64>, Vector3<f64>) {
        let hand = match side {
            crate::params::Side::Left => &self.left,
            crate::params::Side::Right => &self.right,
        };
        (hand.skin[joint].r, hand.skin[joint].t)
    }
}

fn pose_hand(
    template: &HandTemplate,
    shape: &crate::params::HandShape,
    orient: &crate::params::HandOrientation,
    fingers: &crate::params::FingerPose,
    offset: &Vector3<f64>,
) -> (Vec<Point3<f64>>, HandCache) {
    let beta = SMatrix::<f64, SHAPE_COEFFS, 1>::from_column_slice(&shape.coefficients);

    let mut joints_shaped = [Vector3::zeros(); JOINT_COUNT];
    for j in 0..JOINT_COUNT {
        joints_shaped[j] = template.rest_joints[j].coords + template.shape_joint_basis[j] * beta;
    }

    let mut local_rot = [Matrix3::identity(); JOINT_COUNT];
    local_rot[0] = rodrigues(&orient.axis_angle);
    for j in 1..JOINT_COUNT {
        local_rot[j] = rodrigues(&fingers.joint_rotations[j - 1]);
    }

    let mut world = [Affine::identity(); JOINT_COUNT];
    world[0] = Affine {
        r: local_rot[0],
        t: joints_shaped[0],
    };
    for j in 1..JOINT_COUNT {
        let p = template.parents[j].expect("non-root joint has a parent");
        let local = Affine {
            r: local_rot[j],
            t: joints_shaped[j] - joints_shaped[p],
        };
        world[j] = world[p].compose(&local);
    }

    let mut skin = [Affine::identity(); JOINT_COUNT];
    for j in 0..JOINT_COUNT {
        skin[j] = Affine {
            r: world[j].r,
            t: world[j].t - world[j].r * joints_shaped[j],
        };
    }

    let mut v_shaped = Vec::with_capacity(template.vertex_count());
    let mut posed = Vec::with_capacity(template.vertex_count());
    for (i, v) in template.rest_vertices.iter().enumerate() {
        let vs = v.coords + template.shape_vertex_basis[i] * beta;
        let mut p = Vector3::zeros();
        for &(b, w) in &template.sparse_weights[i] {
            p += skin[b as usize].apply(&vs) * w;
        }
        v_shaped.push(vs);
        posed.push(Point3::from(p + offset));
    }

    (
        posed,
        HandCache {
            v_shaped,
            joints_shaped,
            local_rot,
            world,
            skin,
        },
    )
}

/// Pose both hands and regress the 42 keypoints.
pub fn forward(template: &HandTemplate, params: &TwoHandParams) -> Result<TwoHandMesh> {
    Ok(forward_cached(template, params)?.0)
}

/// [`forward`] that also returns the intermediate transforms needed by
/// the derivative passes.
pub fn forward_cached(
    template: &HandTemplate,
    params: &TwoHandParams,
) -> Result<(TwoHandMesh, ForwardCache)> {
    params.validate()?;
    let (right_vertices, right) = pose_hand(
        template,
        &params.right_shape,
        &params.right_orient,
        &params.right_fingers,
        &Vector3::zeros(),
    );
    let (left_vertices, left) = pose_hand(
        template,
        &params.left_shape,
        &params.left_orient,
        &params.left_fingers,
        &params.translation,
    );

    let mut joints_3d = [Point3::origin(); TOTAL_KEYPOINTS];
    regress_into(template, &left_vertices, &mut joints_3d[..KEYPOINT_COUNT]);
    regress_into(template, &right_vertices, &mut joints_3d[KEYPOINT_COUNT..]);

    Ok((
        TwoHandMesh {
            left_vertices,
            right_vertices,
            faces: template.faces.clone(),
            joints_3d,
        },
        ForwardCache { left, right },
    ))
}

fn regress_into(template: &HandTemplate, vertices: &[Point3<f64>], out: &mut [Point3<f64>]) {
    for (k, row) in template.regressor_rows.iter().enumerate() {
        let mut p = Vector3::zeros();
        for &(v, w) in row {
            p += vertices[v as usize].coords * w;
        }
        out[k] = Point3::from(p);
    }
}

/// Apply the keypoint regressor to one hand's posed vertices.
pub fn regress_hand_joints(
    template: &HandTemplate,
    vertices: &[Point3<f64>],
) -> Result<[Point3<f64>; KEYPOINT_COUNT]> {
    if vertices.len() != template.vertex_count() {
        return Err(Error::DimensionMismatch {
            field: "vertices",
            expected: template.vertex_count(),
            found: vertices.len(),
        });
    }
    let mut out = [Point3::origin(); KEYPOINT_COUNT];
    regress_into(template, vertices, &mut out);
    Ok(out)
}

/// Apply the keypoint regressor to a posed pair of hands.
pub fn regress_joints(
    template: &HandTemplate,
    mesh: &TwoHandMesh,
) -> Result<[Point3<f64>; TOTAL_KEYPOINTS]> {
    let left = regress_hand_joints(template, &mesh.left_vertices)?;
    let right = regress_hand_joints(template, &mesh.right_vertices)?;
    let mut out = [Point3::origin(); TOTAL_KEYPOINTS];
    out[..KEYPOINT_COUNT].copy_from_slice(&left);
    out[KEYPOINT_COUNT..].copy_from_slice(&right);
    Ok(out)
}

/// Directional derivative of the posed geometry along a parameter
/// tangent. Returns per-vertex and per-keypoint displacement rates.
pub fn forward_jvp(
    template: &HandTemplate,
    params: &TwoHandParams,
    cache: &ForwardCache,
    tangent: &ParamDelta,
) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>, [Vector3<f64>; TOTAL_KEYPOINTS]) {
    let d_right = hand_jvp(
        template,
        &params.right_orient,
        &params.right_fingers,
        &cache.right,
        &tangent.right_orient,
        &tangent.right_fingers,
        &tangent.right_shape,
        &Vector3::zeros(),
    );
    let d_left = hand_jvp(
        template,
        &params.left_orient,
        &params.left_fingers,
        &cache.left,
        &tangent.left_orient,
        &tangent.left_fingers,
        &tangent.left_shape,
        &tangent.translation,
    );

    let mut d_joints = [Vector3::zeros(); TOTAL_KEYPOINTS];
    for (k, row) in template.regressor_rows.iter().enumerate() {
        let mut dl = Vector3::zeros();
        let mut dr = Vector3::zeros();
        for &(v, w) in row {
            dl += d_left[v as usize] * w;
            dr += d_right[v as usize] * w;
        }
        d_joints[k] = dl;
        d_joints[KEYPOINT_COUNT + k] = dr;
    }
    (d_left, d_right, d_joints)
}

#[allow(clippy::too_many_arguments)]
fn hand_jvp(
    template: &HandTemplate,
    orient: &crate::params::HandOrientation,
    fingers: &crate::params::FingerPose,
    cache: &HandCache,
    d_orient: &Vector3<f64>,
    d_fingers: &[Vector3<f64>; 15],
    d_shape: &[f64; SHAPE_COEFFS],
    d_offset: &Vector3<f64>,
) -> Vec<Vector3<f64>> {
    let d_beta = SMatrix::<f64, SHAPE_COEFFS, 1>::from_column_slice(d_shape);

    let mut d_joints = [Vector3::zeros(); JOINT_COUNT];
    for j in 0..JOINT_COUNT {
        d_joints[j] = template.shape_joint_basis[j] * d_beta;
    }

    let mut d_rot = [Matrix3::zeros(); JOINT_COUNT];
    {
        let jac = rodrigues_jacobian(&orient.axis_angle);
        for k in 0..3 {
            d_rot[0] += jac[k] * d_orient[k];
        }
    }
    for j in 1..JOINT_COUNT {
        let jac = rodrigues_jacobian(&fingers.joint_rotations[j - 1]);
        for k in 0..3 {
            d_rot[j] += jac[k] * d_fingers[j - 1][k];
        }
    }

    // d(world) via the same recursion as the forward pass
    let mut dw_r = [Matrix3::zeros(); JOINT_COUNT];
    let mut dw_t = [Vector3::zeros(); JOINT_COUNT];
    dw_r[0] = d_rot[0];
    dw_t[0] = d_joints[0];
    for j in 1..JOINT_COUNT {
        let p = template.parents[j].unwrap();
        let o = cache.joints_shaped[j] - cache.joints_shaped[p];
        let d_o = d_joints[j] - d_joints[p];
        dw_r[j] = dw_r[p] * cache.local_rot[j] + cache.world[p].r * d_rot[j];
        dw_t[j] = dw_r[p] * o + cache.world[p].r * d_o + dw_t[p];
    }

    // d(skin)
    let mut ds_r = [Matrix3::zeros(); JOINT_COUNT];
    let mut ds_t = [Vector3::zeros(); JOINT_COUNT];
    for j in 0..JOINT_COUNT {
        ds_r[j] = dw_r[j];
        ds_t[j] = dw_t[j] - dw_r[j] * cache.joints_shaped[j] - cache.world[j].r * d_joints[j];
    }

    let mut out = Vec::with_capacity(template.vertex_count());
    for i in 0..template.vertex_count() {
        let vs = cache.v_shaped[i];
        let dvs = template.shape_vertex_basis[i] * d_beta;
        let mut d = *d_offset;
        for &(b, w) in &template.sparse_weights[i] {
            let b = b as usize;
            d += (ds_r[b] * vs + cache.skin[b].r * dvs + ds_t[b]) * w;
        }
        out.push(d);
    }
    out
}

/// Reverse-mode pass: fold cotangents on posed vertices and keypoints
/// back into a parameter gradient.
pub fn backward(
    template: &HandTemplate,
    params: &TwoHandParams,
    cache: &ForwardCache,
    left_cot: &[Vector3<f64>],
    right_cot: &[Vector3<f64>],
    joint_cot: &[Vector3<f64>; TOTAL_KEYPOINTS],
) -> ParamDelta {
    // route keypoint cotangents through the regressor
    let n = template.vertex_count();
    let mut left_bar = vec![Vector3::zeros(); n];
    let mut right_bar = vec![Vector3::zeros(); n];
    left_bar.copy_from_slice(left_cot);
    right_bar.copy_from_slice(right_cot);
    for (k, row) in template.regressor_rows.iter().enumerate() {
        for &(v, w) in row {
            left_bar[v as usize] += joint_cot[k] * w;
            right_bar[v as usize] += joint_cot[KEYPOINT_COUNT + k] * w;
        }
    }

    let mut grad = ParamDelta::zeros();
    grad.translation = left_bar.iter().fold(Vector3::zeros(), |a, v| a + v);

    let (l_orient, l_fingers, l_shape) = hand_vjp(
        template,
        &params.left_orient,
        &params.left_fingers,
        &cache.left,
        &left_bar,
    );
    let (r_orient, r_fingers, r_shape) = hand_vjp(
        template,
        &params.right_orient,
        &params.right_fingers,
        &cache.right,
        &right_bar,
    );
    grad.left_orient = l_orient;
    grad.left_fingers = l_fingers;
    grad.left_shape = l_shape;
    grad.right_orient = r_orient;
    grad.right_fingers = r_fingers;
    grad.right_shape = r_shape;
    grad
}

fn hand_vjp(
    template: &HandTemplate,
    orient: &crate::params::HandOrientation,
    fingers: &crate::params::FingerPose,
    cache: &HandCache,
    vert_bar: &[Vector3<f64>],
) -> (Vector3<f64>, [Vector3<f64>; 15], [f64; SHAPE_COEFFS]) {
    let mut sr_bar = [Matrix3::zeros(); JOINT_COUNT];
    let mut st_bar = [Vector3::zeros(); JOINT_COUNT];
    let mut beta_bar = SMatrix::<f64, SHAPE_COEFFS, 1>::zeros();

    for i in 0..template.vertex_count() {
        let vb = vert_bar[i];
        let vs = cache.v_shaped[i];
        let mut vshaped_bar = Vector3::zeros();
        for &(b, w) in &template.sparse_weights[i] {
            let b = b as usize;
            st_bar[b] += vb * w;
            sr_bar[b] += vb * vs.transpose() * w;
            vshaped_bar += cache.skin[b].r.transpose() * vb * w;
        }
        beta_bar += template.shape_vertex_basis[i].transpose() * vshaped_bar;
    }

    // skin → world and rest-joint cotangents
    let mut wr_bar = [Matrix3::zeros(); JOINT_COUNT];
    let mut wt_bar = [Vector3::zeros(); JOINT_COUNT];
    let mut joint_bar = [Vector3::zeros(); JOINT_COUNT];
    for j in 0..JOINT_COUNT {
        wr_bar[j] = sr_bar[j] - st_bar[j] * cache.joints_shaped[j].transpose();
        wt_bar[j] = st_bar[j];
        joint_bar[j] -= cache.world[j].r.transpose() * st_bar[j];
    }

    // walk the tree children-first (parents have smaller indices)
    let mut rot_bar = [Matrix3::zeros(); JOINT_COUNT];
    for j in (1..JOINT_COUNT).rev() {
        let p = template.parents[j].unwrap();
        let o = cache.joints_shaped[j] - cache.joints_shaped[p];
        wr_bar[p] += wr_bar[j] * cache.local_rot[j].transpose() + wt_bar[j] * o.transpose();
        wt_bar[p] += wt_bar[j];
        rot_bar[j] = cache.world[p].r.transpose() * wr_bar[j];
        let o_bar = cache.world[p].r.transpose() * wt_bar[j];
        joint_bar[j] += o_bar;
        joint_bar[p] -= o_bar;
    }
    rot_bar[0] = wr_bar[0];
    joint_bar[0] += wt_bar[0];

    for j in 0..JOINT_COUNT {
        beta_bar += template.shape_joint_basis[j].transpose() * joint_bar[j];
    }

    let frob = |a: &Matrix3<f64>, b: &Matrix3<f64>| a.component_mul(b).sum();
    let mut orient_bar = Vector3::zeros();
    {
        let jac = rodrigues_jacobian(&orient.axis_angle);
        for k in 0..3 {
            orient_bar[k] = frob(&rot_bar[0], &jac[k]);
        }
    }
    let mut finger_bar = [Vector3::zeros(); 15];
    for j in 1..JOINT_COUNT {
        let jac = rodrigues_jacobian(&fingers.joint_rotations[j - 1]);
        for k in 0..3 {
            finger_bar[j - 1][k] = frob(&rot_bar[j], &jac[k]);
        }
    }

    let mut shape_bar = [0.0; SHAPE_COEFFS];
    shape_bar.copy_from_slice(beta_bar.as_slice());
    (orient_bar, finger_bar, shape_bar)
}
