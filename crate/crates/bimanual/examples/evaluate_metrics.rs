//! Tour of the evaluation metrics: what each alignment removes, what it
//! keeps, and how scenes are classified.
//!
//! ```bash
//! cargo run --release -p bimanual --example evaluate_metrics
//! ```

use bimanual::metrics::similarity_align_no_rotation;
use bimanual::rotation::rodrigues;
use bimanual::{build_template, classify_interaction, forward, i_mpjpe_mm, mpjpe_mm, TemplateConfig, TwoHandParams};
use nalgebra::{Point3, Vector3};

fn main() -> anyhow::Result<()> {
    let template = build_template(&TemplateConfig::default())?;
    let mut params = TwoHandParams::rest();
    params.translation = Vector3::new(0.02, 0.0, 0.035);
    params.left_orient.axis_angle = Vector3::new(0.0, std::f64::consts::PI, 0.0);
    let gt = forward(&template, &params)?.joints_3d;
    let valid = [true; 42];

    println!("prediction                         MPJPE      I-MPJPE (mm)");
    let report = |label: &str, pred: &[Point3<f64>; 42]| {
        println!(
            "{label:<32} {:>8.3} {:>12.3}",
            mpjpe_mm(pred, &gt, &valid).unwrap(),
            i_mpjpe_mm(pred, &gt, &valid).unwrap()
        );
    };

    report("exact", &gt);

    let mut shifted = gt;
    for (k, j) in shifted.iter_mut().enumerate() {
        *j += if k < 21 {
            Vector3::new(0.03, -0.01, 0.02)
        } else {
            Vector3::new(-0.02, 0.02, -0.01)
        };
    }
    report("per-hand offsets", &shifted);

    let mut scaled = gt;
    for j in scaled.iter_mut() {
        *j = Point3::from(j.coords * 1.25 + Vector3::new(0.1, 0.1, 0.1));
    }
    report("global scale + shift", &scaled);

    let r = rodrigues(&(Vector3::y() * 0.2));
    let mut rotated = gt;
    for j in rotated.iter_mut() {
        *j = Point3::from(r * j.coords);
    }
    report("global 11.5° rotation", &rotated);

    // MPJPE forgives per-hand placement; I-MPJPE forgives one shared
    // similarity (without rotation), so rotations stay visible in both.

    println!("\ninteraction classes:");
    println!("  tight pair     -> {:?}", classify_interaction(&gt, &valid));
    let mut far = gt;
    for j in far.iter_mut().take(21) {
        *j += Vector3::new(0.6, 0.0, 0.0);
    }
    println!("  hands far apart-> {:?}", classify_interaction(&far, &valid));
    let mut one_hand = [false; 42];
    for v in one_hand.iter_mut().take(21) {
        *v = true;
    }
    println!("  one hand only  -> {:?}", classify_interaction(&gt, &one_hand));

    let alignment = similarity_align_no_rotation(&scaled.to_vec(), &gt.to_vec())?;
    println!(
        "\nsimilarity alignment of the scaled prediction: scale {:.4}, translation ({:.3}, {:.3}, {:.3})",
        alignment.scale, alignment.translation.x, alignment.translation.y, alignment.translation.z
    );
    Ok(())
}
