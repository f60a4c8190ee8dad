//! Tracks two boxes, one of them crossing the seam, through a detection gap.

use vp360::error::Result;
use vp360::geometry::FrameDims;
use vp360::tracker::{run_tracker, trajectory_rows, Detection, TrackerConfig};

fn main() -> Result<()> {
    let dims = FrameDims::new(3840, 1920)?;
    let mut dets = Vec::new();
    for f in 0..40usize {
        // moves right 20 px per frame, wrapping at x = 3840
        let x0 = (3700.0 + 20.0 * f as f64).rem_euclid(3840.0);
        let x1 = (x0 + 60.0).rem_euclid(3840.0);
        dets.push(Detection::new(f, x0, 900.0, x1, 980.0));
        // the second object is missed for frames 10..15
        if !(10..15).contains(&f) {
            dets.push(Detection::new(f, 1000.0 + 5.0 * f as f64, 400.0, 1100.0 + 5.0 * f as f64, 480.0));
        }
    }

    let tracks = run_tracker(&dets, dims, TrackerConfig::default())?;
    for t in &tracks {
        println!("track {}: frames {}..={} ({} points)", t.id, t.first_frame(), t.last_frame(), t.points.len());
    }
    // object 0 around the seam, object 1 through its interpolated gap
    let shown = |f: usize, id: u32| (id == 0 && (4..9).contains(&f)) || (id == 1 && (8..16).contains(&f));
    for (frame, id, p) in trajectory_rows(&tracks).into_iter().filter(|r| shown(r.0, r.1)) {
        println!("frame {frame:2} id {id}: ({:7.1}, {:6.1})", p.x, p.y);
    }
    Ok(())
}
