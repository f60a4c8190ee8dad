//! Fits ARIMA(2,1,1) to a noisy drifting signal and forecasts one chunk ahead,
//! including the log/shift transforms the predictor uses for `x`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use vp360::error::Result;
use vp360::timeseries::{apply_transforms, companion_radius, fit, invert_forecast, ArimaOrder, Axis};

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 4.0).unwrap();
    // slow sinusoidal pan around the seam, 150 frames
    let width = 3840.0;
    let xs: Vec<f64> = (0..150)
        .map(|f| {
            let t = f as f64 / 30.0;
            (3600.0 + 300.0 * t + 200.0 * (t * 1.3).sin() + noise.sample(&mut rng)).rem_euclid(width)
        })
        .collect();

    let order = ArimaOrder::new(2, 1, 1)?;
    let (logged, chain) = apply_transforms(&xs, Axis::Horizontal { width }, 0)?;
    let model = fit(&logged, order)?;
    println!("ar {:?} ma {:?} intercept {:.3e}", model.ar, model.ma, model.intercept);
    println!(
        "AR root radius {:.3}, MA root radius {:.3}",
        companion_radius(&model.ar),
        companion_radius(&model.ma.iter().map(|b| -b).collect::<Vec<_>>())
    );

    let ahead = invert_forecast(&model.forecast(30), &chain);
    for (h, x) in ahead.iter().enumerate().step_by(5) {
        println!("h={:2}: x = {:7.1} (wrapped {:7.1})", h + 1, x, x.rem_euclid(width));
    }
    Ok(())
}
