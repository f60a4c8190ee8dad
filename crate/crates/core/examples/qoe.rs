//! QoE terms for a two-chunk session under a predicted and a uniform allocation.

use vp360::allocator::{allocate_naba, allocate_pyramid, PlayerFov, TileGrid};
use vp360::error::Result;
use vp360::geometry::{EquirectPoint, FrameDims};
use vp360::metrics::{aggregate_qoe, ChunkRecord};

fn main() -> Result<()> {
    let grid = TileGrid::new(8, 8, FrameDims::new(3840, 1920)?)?;
    let fov = PlayerFov { width: 600.0, height: 300.0 };
    let actual: Vec<Vec<EquirectPoint>> = (0..2)
        .map(|c| (0..30).map(|f| EquirectPoint::new(1000.0 + 15.0 * (30 * c + f) as f64, 900.0)).collect())
        .collect();
    // prediction lags the viewer by 50 px
    let predicted: Vec<Vec<EquirectPoint>> = actual
        .iter()
        .map(|ch| ch.iter().map(|p| EquirectPoint::new(p.x - 50.0, p.y)).collect())
        .collect();

    for name in ["pyramid", "uniform"] {
        let mut records = Vec::new();
        for c in 0..2 {
            let (allocation, pred) = if name == "pyramid" {
                (allocate_pyramid(&predicted[c], &grid, &fov, 8.0)?, predicted[c].clone())
            } else {
                (allocate_naba(&grid, 8.0)?, Vec::new())
            };
            records.push(ChunkRecord {
                chunk: c,
                actual: actual[c].clone(),
                predicted: pred,
                allocation,
                fov,
                grid,
            });
        }
        let rep = aggregate_qoe(&records)?;
        for ch in &rep.chunks {
            println!(
                "{name} chunk {}: q1 {:.3} q2 {:.3} q3 {:.3} q4 {:.3} tile error {:?}",
                ch.chunk, ch.q1, ch.q2, ch.q3, ch.q4, ch.tile_error
            );
        }
        println!("{name}: Q = {:.3}", rep.q);
    }
    Ok(())
}
