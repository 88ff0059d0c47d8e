//! Axis-angle rotation utilities.
//!
//! Rotations are stored as axis-angle 3-vectors: the direction is the
//! rotation axis and the norm is the angle in radians. This module
//! provides the exponential map (Rodrigues' formula), its inverse, the
//! analytic Jacobian of the rotation matrix with respect to the
//! axis-angle components, and Kabsch rigid alignment.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::Error;
use crate::Result;

/// Skew-symmetric cross-product matrix `[v]×`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation matrix from an axis-angle vector (Rodrigues' formula).
///
/// The zero vector maps to the identity; the formula is analytic in the
/// input so no special casing is visible to callers.
pub fn rodrigues(axis_angle: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = axis_angle.norm_squared();
    let k = skew(axis_angle);
    let (a, b) = sin_cos_coeffs(theta2);
    Matrix3::identity() + k * a + k * k * b
}

/// Coefficients (sinθ/θ, (1−cosθ)/θ²) with a Taylor branch near zero.
fn sin_cos_coeffs(theta2: f64) -> (f64, f64) {
    if theta2 < 1e-14 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    }
}

/// Inverse of [`rodrigues`]: recovers an axis-angle vector with angle in
/// `[0, π]`.
pub fn axis_angle_from_rotation(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let angle = cos.acos();
    // vee((R - Rᵀ)/2) = sinθ · axis
    let w = Vector3::new(
        (r[(2, 1)] - r[(1, 2)]) * 0.5,
        (r[(0, 2)] - r[(2, 0)]) * 0.5,
        (r[(1, 0)] - r[(0, 1)]) * 0.5,
    );
    if angle < 1e-7 {
        // sinθ·axis ≈ θ·axis to O(θ³)
        return w;
    }
    if angle > std::f64::consts::PI - 1e-5 {
        // Near a half turn the skew part vanishes; recover the axis from
        // (R + I)/2 ≈ aaᵀ and fix the signs with the skew part.
        let m = (r + Matrix3::identity()) * 0.5;
        let mut axis = Vector3::new(m[(0, 0)].max(0.0).sqrt(), m[(1, 1)].max(0.0).sqrt(), m[(2, 2)].max(0.0).sqrt());
        // Largest component is numerically reliable; derive the other
        // signs from the symmetric off-diagonal products a_i a_j.
        let i = axis.imax();
        if axis[i] > 0.0 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            if m[(i, j)] < 0.0 {
                axis[j] = -axis[j];
            }
            if m[(i, k)] < 0.0 {
                axis[k] = -axis[k];
            }
        }
        // Align with the (possibly tiny) skew part so angles just below π
        // keep a consistent sign.
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
        let n = axis.norm();
        if n > 0.0 {
            return axis * (angle / n);
        }
        return Vector3::zeros();
    }
    w * (angle / angle.sin())
}

/// Analytic Jacobian of [`rodrigues`]: `out[i] = ∂R/∂ω_i`.
///
/// Uses the closed form of Gallego & Yezzi away from the origin and the
/// series expansion near it; both branches agree well inside f64
/// precision at the 1e-7 handoff.
pub fn rodrigues_jacobian(axis_angle: &Vector3<f64>) -> [Matrix3<f64>; 3] {
    let theta2 = axis_angle.norm_squared();
    let r = rodrigues(axis_angle);
    let mut out = [Matrix3::zeros(); 3];
    if theta2 < 1e-14 {
        let k = skew(axis_angle);
        for i in 0..3 {
            let e = skew(&Vector3::ith(i, 1.0));
            out[i] = e + (e * k + k * e) * 0.5;
        }
        return out;
    }
    let k = skew(axis_angle);
    for i in 0..3 {
        let e = Vector3::ith(i, 1.0);
        let v = axis_angle.cross(&((Matrix3::identity() - r) * e));
        out[i] = ((k * axis_angle[i] + skew(&v)) / theta2) * r;
    }
    out
}

/// Least-squares rotation aligning `source` to `target` (Kabsch).
///
/// Both point sets are centered internally, so any relative translation
/// is ignored. Returns the proper rotation `R` minimizing
/// `Σ ‖R(p_i − p̄) − (q_i − q̄)‖²`.
pub fn kabsch_rotation(source: &[Point3<f64>], target: &[Point3<f64>]) -> Result<Matrix3<f64>> {
    if source.len() != target.len() {
        return Err(Error::DimensionMismatch {
            field: "kabsch point sets",
            expected: source.len(),
            found: target.len(),
        });
    }
    if source.len() < 3 {
        return Err(Error::DegenerateGeometry(
            "kabsch needs at least 3 points".into(),
        ));
    }
    let n = source.len() as f64;
    let sc = source.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let tc = target.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;

    let mut cov = Matrix3::zeros();
    let mut scale = 0.0_f64;
    for (p, q) in source.iter().zip(target) {
        let ps = p.coords - sc;
        let qs = q.coords - tc;
        cov += qs * ps.transpose();
        scale = scale.max(ps.norm_squared()).max(qs.norm_squared());
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateGeometry("SVD failed to converge".into())),
    };
    // Two vanishing singular values mean the points are collinear or
    // coincident and the rotation is not unique.
    let s = svd.singular_values;
    if s[1] <= 1e-12 * scale.sqrt().max(1e-300) {
        return Err(Error::DegenerateGeometry(
            "alignment points are collinear or coincident".into(),
        ));
    }
    let d = (u * v_t).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    Ok(u * correction * v_t)
}

/// Minimal rotation mapping unit vector `from` onto unit vector `to`.
///
/// The rotation axis is `from × to`, so the result carries no twist about
/// `from`. Antiparallel inputs rotate by π about a deterministic
/// perpendicular axis.
pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    let cross = from.cross(to);
    let s = cross.norm();
    let c = from.dot(to);
    if s < 1e-12 {
        if c >= 0.0 {
            return Matrix3::identity();
        }
        let axis = orthogonal_unit(from);
        return rodrigues(&(axis * std::f64::consts::PI));
    }
    let angle = s.atan2(c);
    rodrigues(&(cross * (angle / s)))
}

/// Deterministic unit vector perpendicular to `v`.
pub fn orthogonal_unit(v: &Vector3<f64>) -> Vector3<f64> {
    let reference = if v.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    v.cross(&reference).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::UnitQuaternion;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_axis_angle(rng: &mut StdRng, max_angle: f64) -> Vector3<f64> {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n < 1e-9 {
            return Vector3::zeros();
        }
        v / n * rng.gen_range(0.0..max_angle)
    }

    #[test]
    fn zero_vector_maps_to_identity() {
        assert_eq!(rodrigues(&Vector3::zeros()), Matrix3::identity());
    }

    #[test]
    fn half_turn_about_x() {
        let r = rodrigues(&Vector3::new(std::f64::consts::PI, 0.0, 0.0));
        let expected = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
        assert_abs_diff_eq!(r, expected, epsilon = 1e-12);
    }

    #[test]
    fn matches_quaternion_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let aa = random_axis_angle(&mut rng, 3.0);
            let r = rodrigues(&aa);
            // orthonormality, det +1
            assert_abs_diff_eq!(r * r.transpose(), Matrix3::identity(), epsilon = 1e-12);
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
            let q = UnitQuaternion::from_scaled_axis(aa);
            assert_abs_diff_eq!(r, *q.to_rotation_matrix().matrix(), epsilon = 1e-12);
        }
    }

    #[test]
    fn fixed_norm_trace_identity() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let mut aa = random_axis_angle(&mut rng, 1.0);
            if aa.norm() < 1e-6 {
                aa = Vector3::x();
            }
            let aa = aa / aa.norm() * 0.3;
            let r = rodrigues(&aa);
            assert_abs_diff_eq!(r.trace(), 1.0 + 2.0 * 0.3_f64.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn log_recovers_angle_in_zero_pi() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let aa = random_axis_angle(&mut rng, 3.1);
            let back = axis_angle_from_rotation(&rodrigues(&aa));
            assert_abs_diff_eq!(rodrigues(&back), rodrigues(&aa), epsilon = 1e-9);
            assert!(back.norm() <= std::f64::consts::PI + 1e-9);
        }
    }

    #[test]
    fn log_near_pi() {
        for axis in [Vector3::x(), Vector3::y(), Vector3::z(), Vector3::new(1.0, 2.0, -0.5).normalize()] {
            for angle in [std::f64::consts::PI - 1e-7, std::f64::consts::PI] {
                let aa = axis * angle;
                let back = axis_angle_from_rotation(&rodrigues(&aa));
                assert_abs_diff_eq!(rodrigues(&back), rodrigues(&aa), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(19);
        let h = 1e-6;
        for _ in 0..30 {
            let aa = random_axis_angle(&mut rng, 2.5);
            let jac = rodrigues_jacobian(&aa);
            for i in 0..3 {
                let mut plus = aa;
                let mut minus = aa;
                plus[i] += h;
                minus[i] -= h;
                let fd = (rodrigues(&plus) - rodrigues(&minus)) / (2.0 * h);
                assert_abs_diff_eq!(jac[i], fd, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn jacobian_at_origin() {
        let jac = rodrigues_jacobian(&Vector3::zeros());
        for i in 0..3 {
            assert_abs_diff_eq!(jac[i], skew(&Vector3::ith(i, 1.0)), epsilon = 1e-12);
        }
    }

    #[test]
    fn kabsch_recovers_known_rotation() {
        let mut rng = StdRng::seed_from_u64(23);
        let pts: Vec<Point3<f64>> = (0..6)
            .map(|_| Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let r_true = rodrigues(&Vector3::new(0.3, -0.8, 0.5));
        let shift = Vector3::new(0.2, -0.1, 3.0);
        let moved: Vec<Point3<f64>> = pts.iter().map(|p| Point3::from(r_true * p.coords + shift)).collect();
        let r = kabsch_rotation(&pts, &moved).unwrap();
        assert_abs_diff_eq!(r, r_true, epsilon = 1e-10);
    }

    #[test]
    fn kabsch_rejects_collinear() {
        let pts: Vec<Point3<f64>> = (0..5).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            kabsch_rotation(&pts, &pts),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn rotation_between_is_swing() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..50 {
            let a = random_axis_angle(&mut rng, 1.0).normalize();
            let b = random_axis_angle(&mut rng, 1.0).normalize();
            let r = rotation_between(&a, &b);
            assert_abs_diff_eq!(r * a, b, epsilon = 1e-10);
            // no twist: the rotation axis is perpendicular to `a`
            let aa = axis_angle_from_rotation(&r);
            if aa.norm() > 1e-9 {
                assert_abs_diff_eq!(aa.normalize().dot(&a), 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rotation_between_antiparallel() {
        let a = Vector3::z();
        let r = rotation_between(&a, &(-a));
        assert_abs_diff_eq!(r * a, -a, epsilon = 1e-12);
    }
}
