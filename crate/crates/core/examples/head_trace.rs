//! Reads a `timestamp,w,x,y,z` head trace, resamples it to 30 fps and writes
//! the per-frame viewports as CSV to stdout.
//!
//! Usage: `cargo run --example head_trace [trace.csv]`; without an argument a
//! built-in 20 Hz trace turning at a constant yaw rate is used.

use vp360::error::Result;
use vp360::geometry::{FrameDims, HeadQuaternion};
use vp360::harness::io::{read_head_trace, write_viewports_to};
use vp360::harness::{resample_trace, HeadTrace};

fn main() -> Result<()> {
    let trace = match std::env::args().nth(1) {
        Some(p) => read_head_trace(p.as_ref())?,
        None => {
            let samples = (0..40)
                .map(|i| {
                    let t = i as f64 * 0.05;
                    let half = 0.4 * t;
                    HeadQuaternion::new(half.cos(), 0.0, 0.0, half.sin(), t)
                })
                .collect();
            HeadTrace::new("demo", "turn", samples)?
        }
    };
    let vps = resample_trace(&trace, 30, FrameDims::new(3840, 1920)?, None)?;
    eprintln!("{} samples over {:.2} s -> {} frames", trace.samples.len(), trace.duration(), vps.len());
    write_viewports_to(std::io::stdout().lock(), &vps)
}
