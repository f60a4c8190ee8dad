//! Runs every variant on the three synthetic viewers and prints the
//! comparison table with per-chunk latency.

use vp360::error::Result;
use vp360::harness::{generate_synthetic, run_experiment, ExperimentConfig, Scenario, SynthSpec, Variant};

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    println!("scenario         variant     Q       tile_err  obj_share  ms/chunk");
    for sc in [Scenario::ObjectFollower, Scenario::Wanderer, Scenario::SeamCrosser] {
        let data = generate_synthetic(&SynthSpec::new(sc, seed))?;
        for v in Variant::ALL {
            let cfg = ExperimentConfig { variant: v, seed, ..Default::default() };
            let r = run_experiment(&cfg, &data.viewports, &data.objects)?;
            let s = r.summary();
            let ms = r.timings.iter().map(|t| t.update_ms + t.predict_ms + t.allocate_ms).sum::<f64>() / r.timings.len() as f64;
            let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
            println!(
                "{:16} {:10} {:7.2} {:>9} {:>10} {:8.3}",
                sc.name(),
                v.name(),
                s.q,
                fmt(s.mean_tile_error),
                fmt(s.mean_object_contribution),
                ms
            );
        }
    }
    Ok(())
}
