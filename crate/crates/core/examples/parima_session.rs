//! Drives a predictor session by hand: warm-up, then predict and observe
//! chunk by chunk, printing the per-chunk mean pixel error.

use vp360::error::Result;
use vp360::harness::{generate_synthetic, Scenario, SynthSpec};
use vp360::predictor::{PredictorMode, PredictorSession, SessionConfig};

fn main() -> Result<()> {
    let spec = SynthSpec {
        duration_seconds: 20.0,
        ..SynthSpec::new(Scenario::ObjectFollower, 1)
    };
    let data = generate_synthetic(&spec)?;
    let cfg = SessionConfig {
        mode: PredictorMode::Parima,
        ..SessionConfig::new(spec.dims, spec.fps)
    };
    let (warm, cs) = (cfg.warmup_frames, cfg.chunk_size);
    let mut s = PredictorSession::new(cfg)?;
    s.warmup(&data.viewports[..warm], &data.objects[..warm])?;

    let w = spec.dims.w();
    let mut start = warm;
    while start + cs <= data.viewports.len() {
        let frames = start..start + cs;
        let pred = s.predict_chunk(&data.objects[frames.clone()])?;
        let actual = &data.viewports[frames.clone()];
        let err: f64 = pred
            .points
            .iter()
            .zip(actual)
            .map(|(p, a)| {
                let dx = (p.x - a.x).rem_euclid(w);
                dx.min(w - dx).hypot(p.y - a.y)
            })
            .sum::<f64>()
            / cs as f64;
        let share = pred.object_contribution.iter().sum::<f64>() / cs as f64;
        println!("chunk at frame {start:4}: mean error {err:6.1} px, object share {share:.2}");
        s.observe_chunk(actual, &data.objects[frames])?;
        start += cs;
    }
    Ok(())
}
