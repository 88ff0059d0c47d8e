//! Procedural hand template: rest mesh, skeleton, skinning weights,
//! keypoint regressor, and linear shape basis.
//!
//! The hand is a union of 20 closed capsules, one per bone segment: for
//! each of five fingers a palm segment (wrist → base knuckle) plus three
//! phalanges. Fingers extend along straight rays from the wrist, which
//! keeps adjacent segments collinear; together with full-ring keypoint
//! regressor rows this makes regressed keypoints coincide with the
//! kinematic joints under any pose (see `kinematics`).
//!
//! The skeleton has 16 transform joints (wrist + 3 per finger). 21
//! keypoints are regressed from the mesh: wrist, the 15 articulated
//! joints, and the five fingertips.
//!
//! Shape coefficients act through a linear basis that scales segment
//! lengths (up to ±20%) and capsule radii (up to ±30%); each vertex and
//! joint carries a precomputed 3×10 displacement matrix so shaped
//! geometry stays an exact affine function of the coefficients.

use nalgebra::{Point3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::params::{HandShape, SHAPE_COEFFS};
use crate::Result;

/// Transform joints per hand.
pub const JOINT_COUNT: usize = 16;
/// Regressed keypoints per hand.
pub const KEYPOINT_COUNT: usize = 21;
/// Fingers per hand.
pub const FINGER_COUNT: usize = 5;
/// Bone segments (and capsules) per hand.
const SEGMENT_COUNT: usize = 4 * FINGER_COUNT;
/// Smallest vertex budget the capsule topology can honor.
pub const MIN_VERTEX_BUDGET: usize = SEGMENT_COUNT * (3 * 2 + 2);

/// Shape basis type: maps the 10 shape coefficients to a 3-vector
/// displacement.
pub type ShapeBasis = SMatrix<f64, 3, SHAPE_COEFFS>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateConfig {
    /// Upper bound on the per-hand vertex count. The builder fits the
    /// capsule tessellation under this budget (the default hits it
    /// exactly).
    pub vertex_budget: usize,
    /// Uniform scale on all bone lengths.
    pub bone_length_scale: f64,
    /// Uniform scale on all capsule radii.
    pub bone_radius_scale: f64,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            vertex_budget: 778,
            bone_length_scale: 1.0,
            bone_radius_scale: 1.0,
        }
    }
}

impl TemplateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vertex_budget < MIN_VERTEX_BUDGET {
            return Err(Error::InvalidConfig(format!(
                "vertex budget {} below the minimum {} required by the capsule topology",
                self.vertex_budget, MIN_VERTEX_BUDGET
            )));
        }
        if !(self.bone_length_scale.is_finite() && self.bone_length_scale > 0.0) {
            return Err(Error::InvalidConfig("bone_length_scale must be positive".into()));
        }
        if !(self.bone_radius_scale.is_finite() && self.bone_radius_scale > 0.0) {
            return Err(Error::InvalidConfig("bone_radius_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Rest-pose hand model shared by both hands of a pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HandTemplate {
    pub config: TemplateConfig,
    /// Rest vertex positions, meters. Wrist at the origin, fingers +y,
    /// palm normal +z.
    pub rest_vertices: Vec<Point3<f64>>,
    /// Shared triangle list (counter-clockwise from outside).
    pub faces: Vec<[u32; 3]>,
    /// Parent joint per transform joint (`None` for the wrist root).
    pub parents: [Option<usize>; JOINT_COUNT],
    /// Rest joint positions, meters.
    pub rest_joints: [Point3<f64>; JOINT_COUNT],
    /// Rest keypoint positions (wrist, 15 knuckles, 5 fingertips).
    pub rest_keypoints: [Point3<f64>; KEYPOINT_COUNT],
    /// Dense row-stochastic skinning weights, one row per vertex.
    pub skin_weights: Vec<[f64; JOINT_COUNT]>,
    /// Sparse companion of `skin_weights` for the hot path.
    pub sparse_weights: Vec<Vec<(u16, f64)>>,
    /// Sparse keypoint regressor rows; each row sums to 1.
    pub regressor_rows: [Vec<(u32, f64)>; KEYPOINT_COUNT],
    /// Per-vertex 3×10 shape displacement.
    pub shape_vertex_basis: Vec<ShapeBasis>,
    /// Per-joint 3×10 shape displacement.
    pub shape_joint_basis: [ShapeBasis; JOINT_COUNT],
}

impl HandTemplate {
    pub fn vertex_count(&self) -> usize {
        self.rest_vertices.len()
    }

    /// Keypoint index of a finger's articulated joints (base, middle,
    /// distal knuckle).
    pub fn finger_joint_keypoints(finger: usize) -> [usize; 3] {
        [1 + 3 * finger, 2 + 3 * finger, 3 + 3 * finger]
    }

    /// Keypoint index of a fingertip.
    pub fn fingertip_keypoint(finger: usize) -> usize {
        16 + finger
    }

    /// Keypoints used for palm-based orientation fitting: wrist plus the
    /// five finger-base knuckles.
    pub fn palm_keypoints() -> [usize; 6] {
        [0, 1, 4, 7, 10, 13]
    }

    /// Shaped rest joints for a given set of shape coefficients.
    pub fn shaped_joints(&self, shape: &HandShape) -> [Point3<f64>; JOINT_COUNT] {
        let beta = SMatrix::<f64, SHAPE_COEFFS, 1>::from_column_slice(&shape.coefficients);
        let mut out = self.rest_joints;
        for (j, base) in self.shape_joint_basis.iter().enumerate() {
            out[j] += base * beta;
        }
        out
    }

    /// Shaped rest vertices for a given set of shape coefficients.
    pub fn shaped_vertices(&self, shape: &HandShape) -> Vec<Point3<f64>> {
        let beta = SMatrix::<f64, SHAPE_COEFFS, 1>::from_column_slice(&shape.coefficients);
        self.rest_vertices
            .iter()
            .zip(&self.shape_vertex_basis)
            .map(|(v, basis)| v + basis * beta)
            .collect()
    }

    /// Dense 21×V keypoint regressor (mostly for tests and inspection).
    pub fn regressor_dense(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.vertex_count()]; KEYPOINT_COUNT];
        for (k, row) in self.regressor_rows.iter().enumerate() {
            for &(v, w) in row {
                rows[k][v as usize] = w;
            }
        }
        rows
    }
}

/// Build the procedural template for a config. Deterministic: the same
/// config always yields a bit-identical template.
pub fn build_template(config: &TemplateConfig) -> Result<HandTemplate> {
    config.validate()?;
    Builder::new(*config).build()
}

// ───────────────────────── geometry layout ─────────────────────────

struct FingerLayout {
    angle_deg: f64,
    elevation_deg: f64,
    palm_length: f64,
    phalanx_lengths: [f64; 3],
    palm_radius: f64,
    phalanx_radii: [f64; 3],
}

const FINGERS: [FingerLayout; FINGER_COUNT] = [
    // thumb
    FingerLayout {
        angle_deg: -55.0,
        elevation_deg: -18.0,
        palm_length: 0.052,
        phalanx_lengths: [0.036, 0.030, 0.024],
        palm_radius: 0.0130,
        phalanx_radii: [0.0115, 0.0105, 0.0095],
    },
    // index
    FingerLayout {
        angle_deg: -20.0,
        elevation_deg: 0.0,
        palm_length: 0.086,
        phalanx_lengths: [0.040, 0.026, 0.020],
        palm_radius: 0.0120,
        phalanx_radii: [0.0095, 0.0085, 0.0075],
    },
    // middle
    FingerLayout {
        angle_deg: 0.0,
        elevation_deg: 0.0,
        palm_length: 0.092,
        phalanx_lengths: [0.044, 0.028, 0.021],
        palm_radius: 0.0125,
        phalanx_radii: [0.0100, 0.0090, 0.0080],
    },
    // ring
    FingerLayout {
        angle_deg: 18.0,
        elevation_deg: 0.0,
        palm_length: 0.086,
        phalanx_lengths: [0.040, 0.027, 0.020],
        palm_radius: 0.0115,
        phalanx_radii: [0.0095, 0.0085, 0.0075],
    },
    // pinky
    FingerLayout {
        angle_deg: 38.0,
        elevation_deg: 0.0,
        palm_length: 0.076,
        phalanx_lengths: [0.032, 0.022, 0.017],
        palm_radius: 0.0100,
        phalanx_radii: [0.0080, 0.0072, 0.0065],
    },
];

fn finger_direction(layout: &FingerLayout) -> Vector3<f64> {
    let a = layout.angle_deg.to_radians();
    let e = layout.elevation_deg.to_radians();
    Vector3::new(a.sin() * e.cos(), a.cos() * e.cos(), e.sin())
}

/// One capsule = one bone segment.
struct Segment {
    /// 0 = palm (wrist → base knuckle), 1..3 = phalanges.
    index: usize,
    start: Point3<f64>,
    end: Point3<f64>,
    radius: f64,
    /// Joint that rigidly carries the capsule.
    drive_joint: usize,
    /// Articulated joint at the far end, if any.
    distal_joint: Option<usize>,
    /// Rest length of this segment.
    length: f64,
    dir: Vector3<f64>,
}

struct VertexGen {
    segment: usize,
    /// Axial coordinate: v = start + axial·(end−start) + radius·radial.
    axial: f64,
    radial: Vector3<f64>,
}

struct Builder {
    config: TemplateConfig,
    segments: Vec<Segment>,
    joints: [Point3<f64>; JOINT_COUNT],
    parents: [Option<usize>; JOINT_COUNT],
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
    gen: Vec<VertexGen>,
    /// Per segment: (near shaft ring vertex ids, far shaft ring ids).
    shaft_rings: Vec<(Vec<u32>, Vec<u32>)>,
}

impl Builder {
    fn new(config: TemplateConfig) -> Self {
        Self {
            config,
            segments: Vec::new(),
            joints: [Point3::origin(); JOINT_COUNT],
            parents: [None; JOINT_COUNT],
            vertices: Vec::new(),
            faces: Vec::new(),
            gen: Vec::new(),
            shaft_rings: Vec::new(),
        }
    }

    fn build(mut self) -> Result<HandTemplate> {
        self.layout_skeleton();
        let (ring_count, seg_counts) = plan_tessellation(self.config.vertex_budget)?;
        for s in 0..SEGMENT_COUNT {
            self.emit_capsule(s, seg_counts[s], ring_count);
        }
        debug_assert!(self.vertices.len() <= self.config.vertex_budget);

        let keypoints = self.rest_keypoints();
        let regressor_rows = self.build_regressor();
        let (skin_weights, sparse_weights) = self.build_skin_weights();
        let (shape_vertex_basis, shape_joint_basis) = self.build_shape_basis();

        Ok(HandTemplate {
            config: self.config,
            rest_vertices: self.vertices,
            faces: self.faces,
            parents: self.parents,
            rest_joints: self.joints,
            rest_keypoints: keypoints,
            skin_weights,
            sparse_weights,
            regressor_rows,
            shape_vertex_basis,
            shape_joint_basis,
        })
    }

    fn layout_skeleton(&mut self) {
        let wrist = Point3::origin();
        self.joints[0] = wrist;
        self.parents[0] = None;
        for (f, layout) in FINGERS.iter().enumerate() {
            let dir = finger_direction(layout);
            let ls = self.config.bone_length_scale;
            let rs = self.config.bone_radius_scale;
            let mcp = wrist + dir * (layout.palm_length * ls);
            let pip = mcp + dir * (layout.phalanx_lengths[0] * ls);
            let dip = pip + dir * (layout.phalanx_lengths[1] * ls);
            let tip = dip + dir * (layout.phalanx_lengths[2] * ls);

            let mcp_j = 1 + 3 * f;
            self.joints[mcp_j] = mcp;
            self.joints[mcp_j + 1] = pip;
            self.joints[mcp_j + 2] = dip;
            self.parents[mcp_j] = Some(0);
            self.parents[mcp_j + 1] = Some(mcp_j);
            self.parents[mcp_j + 2] = Some(mcp_j + 1);

            let ends = [wrist, mcp, pip, dip, tip];
            let radii = [
                layout.palm_radius * rs,
                layout.phalanx_radii[0] * rs,
                layout.phalanx_radii[1] * rs,
                layout.phalanx_radii[2] * rs,
            ];
            for s in 0..4 {
                let drive_joint = if s == 0 { 0 } else { mcp_j + s - 1 };
                let distal_joint = if s < 3 { Some(mcp_j + s) } else { None };
                self.segments.push(Segment {
                    index: s,
                    start: ends[s],
                    end: ends[s + 1],
                    radius: radii[s],
                    drive_joint,
                    distal_joint,
                    length: (ends[s + 1] - ends[s]).norm(),
                    dir,
                });
            }
        }
    }

    /// Emit one closed capsule. `around` is the ring segment count,
    /// `ring_count` the number of rings (2, 4 or 6: shaft end rings plus
    /// 0, 1 or 2 cap rings per hemisphere).
    fn emit_capsule(&mut self, seg_idx: usize, around: usize, ring_count: usize) {
        let seg = &self.segments[seg_idx];
        let dir = seg.dir;
        let u = crate::rotation::orthogonal_unit(&dir);
        let v = dir.cross(&u);
        let r = seg.radius;
        let caps = (ring_count - 2) / 2;

        // polar angles of the cap rings, pole-side first
        let cap_angles: Vec<f64> = (0..caps)
            .map(|i| {
                std::f64::consts::FRAC_PI_2 * (caps - i) as f64 / (caps + 1) as f64
            })
            .collect();

        let base = self.vertices.len() as u32;
        let mut rings: Vec<Vec<u32>> = Vec::with_capacity(ring_count);

        // bottom pole
        let bottom_pole = self.push_vertex(seg_idx, 0.0, -dir, r);
        // bottom cap rings (overshooting behind the start point)
        for &psi in &cap_angles {
            rings.push(self.push_ring(seg_idx, 0.0, -psi.sin(), psi.cos(), around, &dir, &u, &v, r));
        }
        // shaft end rings
        let near_ring = self.push_ring(seg_idx, 0.0, 0.0, 1.0, around, &dir, &u, &v, r);
        rings.push(near_ring.clone());
        let far_ring = self.push_ring(seg_idx, 1.0, 0.0, 1.0, around, &dir, &u, &v, r);
        rings.push(far_ring.clone());
        // top cap rings
        for &psi in cap_angles.iter().rev() {
            rings.push(self.push_ring(seg_idx, 1.0, psi.sin(), psi.cos(), around, &dir, &u, &v, r));
        }
        // top pole
        let top_pole = self.push_vertex(seg_idx, 1.0, dir, r);
        let _ = base;

        // bottom fan
        for j in 0..around {
            let jn = (j + 1) % around;
            self.faces.push([bottom_pole, rings[0][jn], rings[0][j]]);
        }
        // strips
        for k in 0..rings.len() - 1 {
            for j in 0..around {
                let jn = (j + 1) % around;
                let a = rings[k][j];
                let b = rings[k][jn];
                let c = rings[k + 1][jn];
                let d = rings[k + 1][j];
                self.faces.push([a, b, c]);
                self.faces.push([a, c, d]);
            }
        }
        // top fan
        let last = rings.len() - 1;
        for j in 0..around {
            let jn = (j + 1) % around;
            self.faces.push([top_pole, rings[last][j], rings[last][jn]]);
        }

        self.shaft_rings.push((near_ring, far_ring));
    }

    fn push_vertex(&mut self, segment: usize, axial: f64, radial: Vector3<f64>, r: f64) -> u32 {
        let seg = &self.segments[segment];
        let pos = seg.start + (seg.end - seg.start) * axial + radial * r;
        let idx = self.vertices.len() as u32;
        self.vertices.push(pos);
        self.gen.push(VertexGen { segment, axial, radial });
        idx
    }

    #[allow(clippy::too_many_arguments)]
    fn push_ring(
        &mut self,
        segment: usize,
        axial: f64,
        axial_tilt: f64,
        radial_scale: f64,
        around: usize,
        dir: &Vector3<f64>,
        u: &Vector3<f64>,
        v: &Vector3<f64>,
        r: f64,
    ) -> Vec<u32> {
        let mut ids = Vec::with_capacity(around);
        for j in 0..around {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / around as f64;
            let radial = dir * axial_tilt + (u * phi.cos() + v * phi.sin()) * radial_scale;
            ids.push(self.push_vertex(segment, axial, radial, r));
        }
        ids
    }

    fn rest_keypoints(&self) -> [Point3<f64>; KEYPOINT_COUNT] {
        let mut out = [Point3::origin(); KEYPOINT_COUNT];
        out[0] = self.joints[0];
        for j in 1..JOINT_COUNT {
            out[j] = self.joints[j];
        }
        for f in 0..FINGER_COUNT {
            out[16 + f] = self.segments[4 * f + 3].end;
        }
        out
    }

    /// Keypoint regressor rows: the uniform average of one complete
    /// shaft ring whose center sits exactly at the keypoint. Full-ring
    /// symmetry makes the regressed point track the kinematic joint
    /// under skinning and shape changes.
    fn build_regressor(&self) -> [Vec<(u32, f64)>; KEYPOINT_COUNT] {
        let ring_row = |ring: &Vec<u32>| -> Vec<(u32, f64)> {
            let n = ring.len();
            let w = 1.0 / n as f64;
            let mut row: Vec<(u32, f64)> = ring.iter().map(|&v| (v, w)).collect();
            let sum: f64 = row.iter().map(|(_, w)| w).sum();
            row[0].1 += 1.0 - sum; // exact row sum
            row
        };
        let mut rows: [Vec<(u32, f64)>; KEYPOINT_COUNT] = Default::default();
        // wrist: near ring of the middle-finger palm capsule
        rows[0] = ring_row(&self.shaft_rings[4 * 2].0);
        for f in 0..FINGER_COUNT {
            // knuckles: far ring of the preceding segment
            for s in 0..3 {
                rows[1 + 3 * f + s] = ring_row(&self.shaft_rings[4 * f + s].1);
            }
            // fingertip: far ring of the distal segment
            rows[16 + f] = ring_row(&self.shaft_rings[4 * f + 3].1);
        }
        rows
    }

    /// Distance-falloff skinning weights. A vertex always weights its
    /// own drive joint; vertices on the near half of a capsule also
    /// blend toward the parent segment's joint and vertices on the far
    /// half toward the distal joint. The falloff is a Gaussian in the
    /// distance to each candidate's segment. Gating the candidates by
    /// capsule end keeps the end rings an exact 50/50 blend of the two
    /// transforms that agree at the joint, so regressed keypoints track
    /// the kinematic joints bit-for-bit under posing.
    fn build_skin_weights(&self) -> (Vec<[f64; JOINT_COUNT]>, Vec<Vec<(u16, f64)>>) {
        let mut dense = Vec::with_capacity(self.vertices.len());
        let mut sparse = Vec::with_capacity(self.vertices.len());
        for (vi, pos) in self.vertices.iter().enumerate() {
            let g = &self.gen[vi];
            let seg = &self.segments[g.segment];
            let sigma = 0.8 * seg.radius;

            // (joint, segment to measure against)
            let mut candidates: Vec<(usize, usize)> = vec![(seg.drive_joint, g.segment)];
            if seg.index > 0 && g.axial < 0.5 {
                candidates.push((self.segments[g.segment - 1].drive_joint, g.segment - 1));
            }
            if g.axial >= 0.5 {
                if let Some(dj) = seg.distal_joint {
                    candidates.push((dj, g.segment + 1));
                }
            }

            let mut raw = [0.0; JOINT_COUNT];
            for &(joint, seg_idx) in &candidates {
                let s = &self.segments[seg_idx];
                let d = point_segment_distance(pos, &s.start, &s.end);
                raw[joint] += (-(d / sigma).powi(2)).exp();
            }
            let max = raw.iter().cloned().fold(0.0, f64::max);
            let mut sum = 0.0;
            for w in raw.iter_mut() {
                if *w < 1e-12 * max {
                    *w = 0.0;
                }
                sum += *w;
            }
            let mut row = [0.0; JOINT_COUNT];
            let mut sp = Vec::new();
            for (j, w) in raw.iter().enumerate() {
                if *w > 0.0 {
                    let nw = w / sum;
                    row[j] = nw;
                    sp.push((j as u16, nw));
                }
            }
            dense.push(row);
            sparse.push(sp);
        }
        (dense, sparse)
    }

    fn build_shape_basis(&self) -> (Vec<ShapeBasis>, [ShapeBasis; JOINT_COUNT]) {
        let (len_rows, width_rows) = shape_pattern_rows();
        let ls = self.config.bone_length_scale;

        // ∂(segment endpoint)/∂β for every segment end along its ray.
        // endpoint_deriv[g][k] is the scalar coefficient multiplying the
        // finger direction.
        let mut endpoint_deriv = vec![[0.0; SHAPE_COEFFS]; SEGMENT_COUNT];
        for f in 0..FINGER_COUNT {
            let mut acc = [0.0; SHAPE_COEFFS];
            for s in 0..4 {
                let g = 4 * f + s;
                let rest_len = self.segments[g].length;
                debug_assert!((rest_len - segment_rest_length(f, s) * ls).abs() < 1e-12);
                for k in 0..SHAPE_COEFFS {
                    acc[k] += rest_len * len_rows[g][k];
                }
                endpoint_deriv[g] = acc;
            }
        }

        let mut joint_basis = [ShapeBasis::zeros(); JOINT_COUNT];
        for f in 0..FINGER_COUNT {
            let dir = self.segments[4 * f].dir;
            for s in 0..3 {
                let mut m = ShapeBasis::zeros();
                for k in 0..SHAPE_COEFFS {
                    m.set_column(k, &(dir * endpoint_deriv[4 * f + s][k]));
                }
                joint_basis[1 + 3 * f + s] = m;
            }
        }

        let mut vertex_basis = Vec::with_capacity(self.vertices.len());
        for g in &self.gen {
            let seg = &self.segments[g.segment];
            let dir = seg.dir;
            let mut m = ShapeBasis::zeros();
            for k in 0..SHAPE_COEFFS {
                // start point motion (ancestor segments on the same ray)
                let start_coeff = if seg.index == 0 {
                    0.0
                } else {
                    endpoint_deriv[g.segment - 1][k]
                };
                let axial_coeff = start_coeff + g.axial * seg.length * len_rows[g.segment][k];
                let col = dir * axial_coeff + g.radial * (seg.radius * width_rows[g.segment][k]);
                m.set_column(k, &col);
            }
            vertex_basis.push(m);
        }
        (vertex_basis, joint_basis)
    }
}

fn segment_rest_length(finger: usize, segment: usize) -> f64 {
    let l = &FINGERS[finger];
    if segment == 0 {
        l.palm_length
    } else {
        l.phalanx_lengths[segment - 1]
    }
}

/// Choose ring count and per-capsule segment counts under the budget.
fn plan_tessellation(budget: usize) -> Result<(usize, Vec<usize>)> {
    // ring counts: 6 (two cap rings per hemisphere), 4, or 2
    for rings in [6usize, 4, 2] {
        let poles = 2 * SEGMENT_COUNT;
        if budget < poles {
            break;
        }
        let per_ring_total = (budget - poles) / rings;
        if per_ring_total < 3 * SEGMENT_COUNT {
            continue;
        }
        let base = per_ring_total / SEGMENT_COUNT;
        let extra = per_ring_total - base * SEGMENT_COUNT;
        let mut seg_counts = vec![base; SEGMENT_COUNT];
        // hand the remainder to the palm capsules first, then proximal
        // phalanges and so on
        let mut priority: Vec<usize> = Vec::with_capacity(SEGMENT_COUNT);
        for s in 0..4 {
            for f in 0..FINGER_COUNT {
                priority.push(4 * f + s);
            }
        }
        for &g in priority.iter().take(extra) {
            seg_counts[g] += 1;
        }
        return Ok((rings, seg_counts));
    }
    Err(Error::InvalidConfig(format!(
        "vertex budget {budget} below the minimum {MIN_VERTEX_BUDGET}"
    )))
}

/// Distance from a point to a line segment.
fn point_segment_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Length and width pattern rows of the shape basis, L1-normalized so a
/// unit coefficient vector moves lengths by at most ±20% and widths by
/// at most ±30%.
fn shape_pattern_rows() -> (Vec<[f64; SHAPE_COEFFS]>, Vec<[f64; SHAPE_COEFFS]>) {
    let mut len_rows = vec![[0.0; SHAPE_COEFFS]; SEGMENT_COUNT];
    let mut width_rows = vec![[0.0; SHAPE_COEFFS]; SEGMENT_COUNT];
    for f in 0..FINGER_COUNT {
        for s in 0..4 {
            let g = 4 * f + s;
            let lr = &mut len_rows[g];
            lr[0] = 1.0; // global length
            if s >= 1 {
                lr[2] = 1.0; // finger length
            } else {
                lr[3] = 1.0; // palm length
            }
            if f == 0 {
                lr[4] = 1.0; // thumb size
            } else {
                lr[4 + f] = 1.0; // per-finger length (index..pinky on 5..8)
            }
            lr[9] = s as f64 / 3.0; // distal taper

            let wr = &mut width_rows[g];
            wr[1] = 1.0; // global width
            if s == 0 {
                wr[3] = 0.7; // palm width follows the palm coefficient
            }
            if f == 0 {
                wr[4] = 0.5;
            }
            wr[9] = (3 - s) as f64 / 3.0 * 0.5; // proximal thickness
        }
    }
    for row in len_rows.iter_mut() {
        normalize_row(row, 0.20);
    }
    for row in width_rows.iter_mut() {
        normalize_row(row, 0.30);
    }
    (len_rows, width_rows)
}

fn normalize_row(row: &mut [f64; SHAPE_COEFFS], target: f64) {
    let l1: f64 = row.iter().map(|v| v.abs()).sum();
    if l1 > 0.0 {
        for v in row.iter_mut() {
            *v *= target / l1;
        }
    }
}
