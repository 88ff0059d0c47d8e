//! Recover hand parameters from observed keypoints: Kabsch orientation
//! from the palm points, then per-joint swing rotations down each
//! finger chain.
//!
//! ```bash
//! cargo run --release -p bimanual --example ik_from_joints
//! ```

use bimanual::rotation::orthogonal_unit;
use bimanual::{
    build_template, forward, orientation_from_joints, swing_from_joints, TemplateConfig,
    TwoHandParams,
};
use nalgebra::{Point3, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() -> anyhow::Result<()> {
    let template = build_template(&TemplateConfig::default())?;
    let mut rng = StdRng::seed_from_u64(11);

    // a random swing-only pose (the recoverable family: twist about a
    // bone axis does not move any joint)
    let mut truth = TwoHandParams::rest();
    truth.right_orient.axis_angle = Vector3::new(0.4, -0.6, 0.3);
    for finger in 0..5 {
        let base = 1 + 3 * finger;
        let dir = (template.rest_keypoints[base + 1] - template.rest_keypoints[base]).normalize();
        let u = orthogonal_unit(&dir);
        let v = dir.cross(&u);
        for joint in 0..3 {
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let angle: f64 = rng.gen_range(-0.5..0.5);
            truth.right_fingers.joint_rotations[3 * finger + joint] =
                (u * phi.cos() + v * phi.sin()) * angle;
        }
    }

    let mesh = forward(&template, &truth)?;
    let mut observed = [Point3::origin(); 21];
    observed.copy_from_slice(&mesh.joints_3d[21..]);

    let orient = orientation_from_joints(&observed, &template)?;
    let fingers = swing_from_joints(&observed, &orient, &template)?;
    println!(
        "orientation: truth {:?}\n             fit   {:?}",
        truth.right_orient.axis_angle.as_slice(),
        orient.axis_angle.as_slice()
    );

    let mut fitted = TwoHandParams::rest();
    fitted.right_orient = orient;
    fitted.right_fingers = fingers;
    let refit = forward(&template, &fitted)?;
    let worst = mesh.joints_3d[21..]
        .iter()
        .zip(&refit.joints_3d[21..])
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    println!("worst joint error after the round trip: {:.3e} m", worst);

    // with noisy observations the recovery degrades gracefully
    for noise_mm in [1.0, 5.0, 10.0] {
        let mut noisy = observed;
        for j in noisy.iter_mut() {
            *j += Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ) * (noise_mm / 1000.0);
        }
        let o = orientation_from_joints(&noisy, &template)?;
        let f = swing_from_joints(&noisy, &o, &template)?;
        let mut p = TwoHandParams::rest();
        p.right_orient = o;
        p.right_fingers = f;
        let m = forward(&template, &p)?;
        let mean = mesh.joints_3d[21..]
            .iter()
            .zip(&m.joints_3d[21..])
            .map(|(a, b)| (a - b).norm())
            .sum::<f64>()
            / 21.0;
        println!("noise {noise_mm:>4.1} mm -> mean joint error {:.2} mm", mean * 1e3);
    }
    Ok(())
}
