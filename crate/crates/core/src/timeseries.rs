//! ARIMA(p, d, q) fitted by Hannan-Rissanen two-stage least squares, plus the
//! seam-unwrap / shift / jitter / log transform chain applied to viewport
//! coordinates before fitting.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        let order = Self { p, d, q };
        order.validate()?;
        Ok(order)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p + self.q == 0 && self.d == 0 {
            return Err(Error::InvalidConfig("ARIMA(0,0,0) has nothing to fit".into()));
        }
        Ok(())
    }

    /// Shortest series `fit` accepts for this order.
    pub fn min_len(&self) -> usize {
        3 * (self.p + self.q) + self.d + 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub intercept: f64,
    /// Last value of the series at each differencing level `0..d`.
    tails: Vec<f64>,
    /// Trailing differenced observations, most recent last.
    recent: Vec<f64>,
    /// Trailing residuals, most recent last.
    residuals: Vec<f64>,
    /// MA terms were requested but dropped because the regression was singular.
    pub ma_dropped: bool,
}

impl ArimaModel {
    /// Builds a model from known coefficients and the observed series.
    pub fn from_parts(
        order: ArimaOrder,
        ar: Vec<f64>,
        ma: Vec<f64>,
        intercept: f64,
        series: &[f64],
    ) -> Result<Self> {
        order.validate()?;
        if ar.len() != order.p || ma.len() != order.q {
            return Err(Error::InvalidInput(format!(
                "expected {} AR and {} MA coefficients, got {} and {}",
                order.p,
                order.q,
                ar.len(),
                ma.len()
            )));
        }
        let (z, tails) = difference_with_tails(series, order.d)?;
        let mut m = Self {
            order,
            ar,
            ma,
            intercept,
            tails,
            recent: Vec::new(),
            residuals: Vec::new(),
            ma_dropped: false,
        };
        m.set_state(&z);
        Ok(m)
    }

    fn set_state(&mut self, z: &[f64]) {
        let p = self.ar.len();
        self.recent = z[z.len().saturating_sub(p)..].to_vec();
        let q = self.ma.len();
        if q == 0 {
            self.residuals.clear();
            return;
        }
        let e = self.in_sample_residuals(z);
        self.residuals = e[e.len().saturating_sub(q)..].to_vec();
    }

    fn in_sample_residuals(&self, z: &[f64]) -> Vec<f64> {
        let start = self.ar.len().max(self.ma.len());
        let mut e = vec![0.0; z.len()];
        for t in start..z.len() {
            let fitted = self.one_step(|k| z[t - k], |k| e[t - k]);
            e[t] = z[t] - fitted;
        }
        if e.iter().any(|v| !v.is_finite()) {
            e.iter_mut().for_each(|v| *v = 0.0);
        }
        e
    }

    /// `lag(k)` / `res(k)` give the value / residual `k` steps back (k >= 1).
    fn one_step(&self, lag: impl Fn(usize) -> f64, res: impl Fn(usize) -> f64) -> f64 {
        let mut v = self.intercept;
        for (i, a) in self.ar.iter().enumerate() {
            v += a * lag(i + 1);
        }
        for (j, b) in self.ma.iter().enumerate() {
            v += b * res(j + 1);
        }
        v
    }

    /// Mean forecast `h` steps ahead on the original (undifferenced) scale.
    pub fn forecast(&self, h: usize) -> Vec<f64> {
        let mut z = self.recent.clone();
        let n0 = z.len();
        // future shocks are zero
        let mut e = self.residuals.clone();
        for _ in 0..h {
            let (n, m) = (z.len(), e.len());
            let next = self.one_step(
                |k| if k <= n { z[n - k] } else { 0.0 },
                |k| if k <= m { e[m - k] } else { 0.0 },
            );
            z.push(sanitize(next));
            e.push(0.0);
        }
        let mut out = z.split_off(n0);
        for &tail in self.tails.iter().rev() {
            let mut acc = tail;
            for v in out.iter_mut() {
                acc = sanitize(acc + *v);
                *v = acc;
            }
        }
        out
    }
}

const FORECAST_LIMIT: f64 = 1e12;

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-FORECAST_LIMIT, FORECAST_LIMIT)
    }
}

pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>> {
    Ok(difference_with_tails(series, d)?.0)
}

fn difference_with_tails(series: &[f64], d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if series.len() <= d {
        return Err(Error::InsufficientData {
            needed: d + 1,
            got: series.len(),
        });
    }
    let mut cur = series.to_vec();
    let mut tails = Vec::with_capacity(d);
    for _ in 0..d {
        tails.push(cur[cur.len() - 1]);
        cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok((cur, tails))
}

/// Reverses `d` differencing passes given the first value at each level
/// (`heads[0]` is the original series' first value).
pub fn undifference(diffed: &[f64], heads: &[f64]) -> Vec<f64> {
    let mut cur = diffed.to_vec();
    for &h in heads.iter().rev() {
        let mut out = Vec::with_capacity(cur.len() + 1);
        out.push(h);
        let mut acc = h;
        for v in &cur {
            acc += v;
            out.push(acc);
        }
        cur = out;
    }
    cur
}

/// Ordinary least squares; `None` when the design matrix is rank deficient.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let k = rows.first()?.len();
    if n < k {
        return None;
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * (n.max(k) as f64) * f64::EPSILON * 1e3;
    if smax == 0.0 || svd.rank(tol) < k {
        return None;
    }
    let sol = svd.solve(&b, tol).ok()?;
    let coefs: Vec<f64> = sol.iter().copied().collect();
    coefs.iter().all(|c| c.is_finite()).then_some(coefs)
}

/// Regresses `z[t]` on `[1, z[t-1..=t-p], e[t-1..=t-q]]` for `t >= start`.
fn regress(z: &[f64], e: Option<&[f64]>, p: usize, q: usize, start: usize) -> Option<Vec<f64>> {
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for t in start..z.len() {
        let mut row = Vec::with_capacity(1 + p + q);
        row.push(1.0);
        row.extend((1..=p).map(|k| z[t - k]));
        if let Some(e) = e {
            row.extend((1..=q).map(|k| e[t - k]));
        }
        rows.push(row);
        ys.push(z[t]);
    }
    least_squares(&rows, &ys)
}

/// Largest root modulus allowed for the fitted AR and MA polynomials.
pub const MAX_ROOT_RADIUS: f64 = 0.99;

/// Spectral radius of the companion matrix with first row `coef`; for AR
/// coefficients this is the largest inverse root of `1 - sum(a_k L^k)`.
pub fn companion_radius(coef: &[f64]) -> f64 {
    let p = coef.len();
    if p == 0 {
        return 0.0;
    }
    let mut m = DMatrix::<f64>::zeros(p, p);
    for (k, &a) in coef.iter().enumerate() {
        m[(0, k)] = a;
    }
    for k in 1..p {
        m[(k, k - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Scales every root of the polynomial by the same factor so the companion
/// radius is at most [`MAX_ROOT_RADIUS`]. `sign` is +1 for AR and -1 for MA
/// coefficients (`1 + sum(b_k L^k)`).
fn shrink_roots(coef: &mut [f64], sign: f64) -> bool {
    let flipped: Vec<f64> = coef.iter().map(|c| sign * c).collect();
    let r = companion_radius(&flipped);
    if !(r >= MAX_ROOT_RADIUS) {
        return false;
    }
    let s = MAX_ROOT_RADIUS / r;
    let mut f = 1.0;
    for c in coef.iter_mut() {
        f *= s;
        *c *= f;
    }
    true
}

/// Fits the model, then enforces a stationary AR part and an invertible MA
/// part and uses the mean parameterization (the process mean is the sample
/// mean of the differenced series), so short noisy chunks cannot produce
/// runaway forecasts.
pub fn fit(series: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    let raw = fit_raw(series, order)?;
    if order.p + order.q == 0 {
        return Ok(raw);
    }
    let (mut ar, mut ma) = (raw.ar.clone(), raw.ma.clone());
    if shrink_roots(&mut ar, 1.0) | shrink_roots(&mut ma, -1.0) {
        log::debug!("ARIMA{:?}: roots scaled into the admissible region", (order.p, order.d, order.q));
    }
    let (z, _) = difference_with_tails(series, order.d)?;
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let intercept = mean * (1.0 - ar.iter().sum::<f64>());
    let mut model = ArimaModel::from_parts(order, ar, ma, intercept, series)?;
    model.ma_dropped = raw.ma_dropped;
    Ok(model)
}

fn fit_raw(series: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    order.validate()?;
    let needed = order.min_len();
    if series.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: series.len(),
        });
    }
    if let Some(bad) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite value {bad} in series")));
    }
    let (z, _) = difference_with_tails(series, order.d)?;
    let (p, q) = (order.p, order.q);
    let zero = |n| vec![0.0; n];

    if p + q == 0 {
        return ArimaModel::from_parts(order, vec![], vec![], 0.0, series);
    }
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let spread = z.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    if spread <= 1e-12 * mean.abs().max(1.0) {
        // constant differenced series: intercept-only
        return ArimaModel::from_parts(order, zero(p), zero(q), mean, series);
    }

    if q > 0 {
        let long = (z.len() / 4).min(10).max(p.max(q) + 1);
        if let Some(c) = regress(&z, None, long, 0, long) {
            let mut e = vec![0.0; z.len()];
            for t in long..z.len() {
                let fitted: f64 = c[0] + (1..=long).map(|k| c[k] * z[t - k]).sum::<f64>();
                e[t] = z[t] - fitted;
            }
            if let Some(c2) = regress(&z, Some(&e), p, q, long + q) {
                return ArimaModel::from_parts(
                    order,
                    c2[1..=p].to_vec(),
                    c2[p + 1..].to_vec(),
                    c2[0],
                    series,
                );
            }
        }
    }

    let mut model = match regress(&z, None, p, 0, p) {
        Some(c) => ArimaModel::from_parts(order, c[1..].to_vec(), zero(q), c[0], series)?,
        None => ArimaModel::from_parts(order, zero(p), zero(q), mean, series)?,
    };
    if q > 0 {
        log::debug!("ARIMA{:?}: MA stage singular, fitted pure AR", (p, order.d, q));
        model.ma_dropped = true;
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    /// Horizontal coordinate on a frame of the given width: seam unwrap and
    /// shift by one width.
    Horizontal { width: f64 },
    /// Vertical coordinate; `limit` bounds the back-transform.
    Vertical { limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformChain {
    /// Offset added before the log (one frame width for `x`, 0 for `y`).
    pub shift: f64,
    pub jitter_seed: u64,
    pub log_applied: bool,
    /// Clamp range for the exponentiated forecast, before the shift is removed.
    pub clamp_min: f64,
    pub clamp_max: f64,
}

pub const JITTER_MAX: f64 = 0.1;

/// Unwraps a horizontal series across the seam, each value relative to the
/// already-adjusted previous value.
pub fn adjust_width(series: &[f64], width: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(series.len());
    for &x in series {
        let v = match out.last() {
            None => x,
            Some(&prev) => {
                let base = (x - prev).abs();
                if (x + width - prev).abs() < base {
                    x + width
                } else if (x - width - prev).abs() < base {
                    x - width
                } else {
                    x
                }
            }
        };
        out.push(v);
    }
    out
}

pub fn apply_transforms(series: &[f64], axis: Axis, jitter_seed: u64) -> Result<(Vec<f64>, TransformChain)> {
    let (mut values, shift, clamp_min, clamp_max) = match axis {
        Axis::Horizontal { width } => {
            let v: Vec<f64> = adjust_width(series, width).into_iter().map(|x| x + width).collect();
            (v, width, 1.0, 3.0 * width)
        }
        Axis::Vertical { limit } => (series.to_vec(), 0.0, 0.0, limit),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(jitter_seed);
    for v in values.iter_mut() {
        *v += rng.gen_range(0.0..JITTER_MAX);
        if !(*v > 0.0) {
            return Err(Error::InvalidState(format!(
                "value {v} is not positive before log transform"
            )));
        }
        *v = v.ln();
    }
    Ok((
        values,
        TransformChain {
            shift,
            jitter_seed,
            log_applied: true,
            clamp_min,
            clamp_max,
        },
    ))
}

/// Back-transforms log-domain forecasts to pixel coordinates. The seam wrap
/// of `x` is left to the caller.
pub fn invert_forecast(values: &[f64], chain: &TransformChain) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let level = if chain.log_applied { v.exp() } else { v };
            let level = if level.is_nan() {
                chain.clamp_min
            } else {
                level.clamp(chain.clamp_min, chain.clamp_max)
            };
            level - chain.shift
        })
        .collect()
}
