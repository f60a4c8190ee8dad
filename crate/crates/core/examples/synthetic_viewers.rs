//! Generates the three synthetic viewers and writes viewports and object
//! trajectories as CSV into a directory (default `synth_out`).

use std::path::PathBuf;

use vp360::error::Result;
use vp360::harness::io::{trajectory_rows_from_frames, write_trajectories, write_viewports};
use vp360::harness::{generate_synthetic, Scenario, SynthSpec};

fn main() -> Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synth_out".into()));
    for sc in [Scenario::ObjectFollower, Scenario::Wanderer, Scenario::SeamCrosser] {
        let data = generate_synthetic(&SynthSpec::new(sc, 0))?;
        let rows = trajectory_rows_from_frames(&data.objects);
        write_viewports(&out.join(format!("{}_viewports.csv", sc.name())), &data.viewports)?;
        write_trajectories(&out.join(format!("{}_trajectories.csv", sc.name())), &rows)?;
        let ids: std::collections::BTreeSet<u32> = rows.iter().map(|r| r.object_id).collect();
        println!("{:16} {} frames, {} object ids", sc.name(), data.viewports.len(), ids.len());
    }
    println!("wrote {}", out.display());
    Ok(())
}
