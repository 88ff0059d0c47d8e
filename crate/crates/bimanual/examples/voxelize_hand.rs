//! Voxelize a posed hand into an interior-distance grid, probe the
//! field along a line, and dump the grid in the binary format the
//! `voxelize` subcommand writes.
//!
//! ```bash
//! cargo run --release -p bimanual --example voxelize_hand
//! ```

use bimanual::{build_template, forward, GridConfig, TemplateConfig, TwoHandParams, VoxelSdf};
use nalgebra::Point3;

fn main() -> anyhow::Result<()> {
    let template = build_template(&TemplateConfig::default())?;
    let mesh = forward(&template, &TwoHandParams::rest())?;

    let grid = VoxelSdf::voxelize(
        &mesh.right_vertices,
        &mesh.faces,
        &GridConfig {
            resolution: 48,
            margin_cells: 2,
        },
    )?;
    println!(
        "grid: {}³ voxels, cell {:.2} mm, origin ({:.3}, {:.3}, {:.3})",
        grid.resolution(),
        grid.cell_size() * 1e3,
        grid.origin().x,
        grid.origin().y,
        grid.origin().z
    );

    // probe along the middle finger ray: ψ rises inside the palm and
    // phalanges, returns to zero between and outside
    println!("\nψ along the middle-finger ray (y axis):");
    for i in 0..40 {
        let y = -0.02 + i as f64 * 0.005;
        let psi = grid.sample(&Point3::new(0.0, y, 0.0));
        let bar = "#".repeat((psi * 2500.0) as usize);
        println!("  y={y:7.3}  ψ={:6.2} mm {bar}", psi * 1e3);
    }

    let path = std::path::Path::new("target/right_hand_psi.grid");
    let mut bytes = Vec::new();
    grid.write_binary(&mut bytes)?;
    std::fs::write(path, &bytes)?;
    println!("\nwrote {} ({} bytes)", path.display(), bytes.len());

    // the dump round-trips
    let back = VoxelSdf::read_binary(std::fs::File::open(path)?)?;
    assert_eq!(back.values(), grid.values());
    Ok(())
}
