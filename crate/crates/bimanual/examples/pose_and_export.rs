//! Build the procedural template, pose a pair of hands, and export the
//! result as OBJ.
//!
//! ```bash
//! cargo run --release -p bimanual --example pose_and_export
//! ```

use bimanual::scene_io::{export_obj, ObjExportOptions};
use bimanual::{build_template, forward, TemplateConfig, TwoHandParams};
use nalgebra::Vector3;

fn main() -> anyhow::Result<()> {
    let template = build_template(&TemplateConfig::default())?;
    println!(
        "template: {} vertices, {} faces, 16 joints, 21 keypoints per hand",
        template.vertex_count(),
        template.faces.len()
    );

    // a lightly interacting pose: left hand above the right, fingers
    // slightly curled
    let mut params = TwoHandParams::rest();
    params.translation = Vector3::new(0.01, -0.01, 0.05);
    params.left_orient.axis_angle = Vector3::new(0.0, std::f64::consts::PI, 0.0);
    for finger in 0..5 {
        for joint in 0..3 {
            let k = 1 + 3 * finger + joint;
            let dir = (template.rest_keypoints[k].coords
                - template.rest_keypoints[if joint == 0 { 0 } else { k - 1 }].coords)
                .normalize();
            let axis = dir.cross(&Vector3::z()).normalize();
            params.right_fingers.joint_rotations[3 * finger + joint] = axis * 0.25;
            params.left_fingers.joint_rotations[3 * finger + joint] = axis * 0.25;
        }
    }

    let mesh = forward(&template, &params)?;
    println!("\nright-hand keypoints (meters):");
    for (k, j) in mesh.joints_3d[21..].iter().enumerate() {
        println!("  {k:>2}: {:8.4} {:8.4} {:8.4}", j.x, j.y, j.z);
    }

    let out = std::path::Path::new("target/pose_and_export.obj");
    export_obj(&mesh, out, &ObjExportOptions::default())?;
    println!("\nwrote {}", out.display());
    Ok(())
}
