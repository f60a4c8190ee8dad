//! Pyramid allocation around a predicted viewport versus the uniform baseline.

use vp360::allocator::{allocate_naba, allocate_pyramid, PlayerFov, TileAllocation, TileGrid};
use vp360::error::Result;
use vp360::geometry::{EquirectPoint, FrameDims};

fn show(name: &str, a: &TileAllocation) {
    println!("{name} (sum {:.3} Mbps)", a.sum());
    for r in 0..a.rows {
        let row: Vec<String> = (0..a.cols).map(|c| format!("{:.3}", a.bitrates[r * a.cols + c])).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> Result<()> {
    let grid = TileGrid::new(8, 8, FrameDims::new(3840, 1920)?)?;
    let fov = PlayerFov { width: 600.0, height: 300.0 };
    // a chunk whose predicted viewport drifts right across the seam
    let predicted: Vec<EquirectPoint> = (0..30).map(|f| EquirectPoint::new((3700.0 + 10.0 * f as f64) % 3840.0, 900.0)).collect();
    show("pyramid", &allocate_pyramid(&predicted, &grid, &fov, 8.0)?);
    show("uniform", &allocate_naba(&grid, 8.0)?);
    Ok(())
}
