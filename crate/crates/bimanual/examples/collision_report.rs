//! Measure inter-hand penetration: the collision energy and the
//! AVE-P/MAX-P depth statistics over a range of hand separations.
//!
//! ```bash
//! cargo run --release -p bimanual --example collision_report
//! ```

use bimanual::{
    build_template, collision_loss, forward, penetration_metrics, GridConfig, TemplateConfig,
    TwoHandParams,
};
use nalgebra::Vector3;

fn main() -> anyhow::Result<()> {
    let template = build_template(&TemplateConfig::default())?;
    let grid = GridConfig::default();

    println!("{:>10} {:>12} {:>10} {:>10} {:>8}", "dz (mm)", "E_col (m)", "AVE-P", "MAX-P", "#pen");
    for step in 0..12 {
        let dz = 0.000 + 0.004 * step as f64;
        let mut params = TwoHandParams::rest();
        // palms facing, left hand descending onto the right
        params.left_orient.axis_angle = Vector3::new(0.0, std::f64::consts::PI, 0.0);
        params.translation = Vector3::new(0.01, -0.01, 0.046 - dz);

        let mesh = forward(&template, &params)?;
        let e_col = collision_loss(&mesh, &grid)?;
        let pen = penetration_metrics(&mesh, &grid)?;
        println!(
            "{:>10.1} {:>12.6} {:>10.3} {:>10.3} {:>8}",
            dz * 1e3,
            e_col,
            pen.ave_p_mm,
            pen.max_p_mm,
            pen.penetrating_vertex_count
        );
    }
    println!("\nE_col grows monotonically as the hands close; disjoint pairs report exact zeros.");
    Ok(())
}
