//! Per-chunk viewport prediction.
//!
//! Each chunk, the previous chunk's actual viewports go through the transform
//! chain and a fresh ARIMA model per axis; the resulting intermediate
//! viewport is fused with the known object positions of the upcoming frames
//! by an online passive-aggressive regressor that persists across chunks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EquirectPoint, FrameDims};
use crate::timeseries::{self, ArimaOrder, Axis};

/// Object positions on one frame, keyed by track id.
pub type ObjectCoords = BTreeMap<u32, EquirectPoint>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectFrame {
    pub frame: usize,
    pub coords: ObjectCoords,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaHyper {
    /// Aggressiveness.
    pub c: f64,
    /// Hinge dead-zone half width.
    pub epsilon: f64,
    /// Step scale.
    pub alpha: f64,
}

impl Default for PaHyper {
    fn default() -> Self {
        Self {
            c: 0.01,
            epsilon: 0.001,
            alpha: 1.0,
        }
    }
}

impl PaHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.epsilon >= 0.0) || !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "PA needs C > 0, epsilon >= 0, alpha > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Linear model `bias + w_intermediate * intermediate + sum(w_i * object_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaModel {
    pub bias: f64,
    pub w_intermediate: f64,
    pub w_objects: BTreeMap<u32, f64>,
    pub hyper: PaHyper,
}

impl PaModel {
    pub fn new(hyper: PaHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            bias: 0.0,
            w_intermediate: 0.0,
            w_objects: BTreeMap::new(),
            hyper,
        })
    }

    pub fn intermediate_term(&self, intermediate: f64) -> f64 {
        self.bias + self.w_intermediate * intermediate
    }

    pub fn object_term(&self, objs: &BTreeMap<u32, f64>) -> f64 {
        objs.iter()
            .map(|(id, v)| self.w_objects.get(id).copied().unwrap_or(0.0) * v)
            .sum()
    }

    pub fn predict(&self, intermediate: f64, objs: &BTreeMap<u32, f64>) -> f64 {
        self.intermediate_term(intermediate) + self.object_term(objs)
    }

    /// One passive-aggressive step. Returns the hinge loss before the update.
    pub fn update(&mut self, intermediate: f64, objs: &BTreeMap<u32, f64>, target: f64) -> f64 {
        let err = target - self.predict(intermediate, objs);
        let loss = (err.abs() - self.hyper.epsilon).max(0.0);
        if loss == 0.0 {
            return 0.0;
        }
        let sq_norm = 1.0 + intermediate * intermediate + objs.values().map(|v| v * v).sum::<f64>();
        let step = self.hyper.alpha * loss / (sq_norm + 1.0 / (2.0 * self.hyper.c)) * err.signum();
        self.bias += step;
        self.w_intermediate += step * intermediate;
        for (&id, &v) in objs {
            *self.w_objects.entry(id).or_insert(0.0) += step * v;
        }
        loss
    }

    /// Share of the object term in the prediction magnitude, in `[0, 1]`.
    pub fn object_contribution(&self, intermediate: f64, objs: &BTreeMap<u32, f64>) -> f64 {
        let o = self.object_term(objs).abs();
        let i = self.intermediate_term(intermediate).abs();
        if o + i == 0.0 {
            0.0
        } else {
            o / (o + i)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorMode {
    /// ARIMA intermediate fused with objects by PA regression.
    Parima,
    /// ARIMA intermediate only.
    ArimaOnly,
    /// PA regression fed with the previous frame's prediction.
    PaOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub dims: FrameDims,
    pub fps: usize,
    pub chunk_size: usize,
    pub warmup_frames: usize,
    pub order_x: ArimaOrder,
    pub order_y: ArimaOrder,
    pub pa: PaHyper,
    /// Scale all PA features and targets by the frame size.
    pub normalize_features: bool,
    pub seed: u64,
    pub mode: PredictorMode,
}

impl SessionConfig {
    pub fn new(dims: FrameDims, fps: usize) -> Self {
        Self {
            dims,
            fps,
            chunk_size: fps,
            warmup_frames: 5 * fps,
            order_x: ArimaOrder { p: 2, d: 1, q: 1 },
            order_y: ArimaOrder { p: 3, d: 1, q: 0 },
            pa: PaHyper::default(),
            normalize_features: false,
            seed: 0,
            mode: PredictorMode::Parima,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk_size must be >= 1".into()));
        }
        if self.warmup_frames < self.chunk_size.max(2) {
            return Err(Error::InvalidConfig(format!(
                "warm-up ({} frames) must cover at least one chunk ({} frames)",
                self.warmup_frames, self.chunk_size
            )));
        }
        self.order_x.validate()?;
        self.order_y.validate()?;
        self.pa.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkPrediction {
    pub points: Vec<EquirectPoint>,
    /// Intermediate viewport per frame, `x` in seam-unwrapped coordinates.
    pub intermediates: Vec<(f64, f64)>,
    /// Object share of the `x` prediction per frame.
    pub object_contribution: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PredictorSession {
    pub cfg: SessionConfig,
    pub pa_x: PaModel,
    pub pa_y: PaModel,
    history: Vec<EquirectPoint>,
    chunks_observed: usize,
    /// Intermediates used by the last prediction and the seam-unwrapped
    /// final history `x` they are relative to.
    pending: Option<(Vec<(f64, f64)>, f64)>,
}

/// `value + k * width` for the integer `k` that lands nearest `reference`.
fn unwrap_near(value: f64, reference: f64, width: f64) -> f64 {
    value + ((reference - value) / width).round() * width
}

fn chunk_seed(seed: u64, chunk: usize, axis: u64) -> u64 {
    let mut z = seed
        .wrapping_add((chunk as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(axis.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl PredictorSession {
    pub fn new(cfg: SessionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            pa_x: PaModel::new(cfg.pa)?,
            pa_y: PaModel::new(cfg.pa)?,
            cfg,
            history: Vec::new(),
            chunks_observed: 0,
            pending: None,
        })
    }

    pub fn history(&self) -> &[EquirectPoint] {
        &self.history
    }

    pub fn is_warmed_up(&self) -> bool {
        !self.history.is_empty()
    }

    fn scales(&self) -> (f64, f64) {
        if self.cfg.normalize_features {
            (1.0 / self.cfg.dims.w(), 1.0 / self.cfg.dims.h())
        } else {
            (1.0, 1.0)
        }
    }

    fn features(&self, objs: Option<&ObjectCoords>) -> (BTreeMap<u32, f64>, BTreeMap<u32, f64>) {
        let (sx, sy) = self.scales();
        match objs {
            None => Default::default(),
            Some(o) => (
                o.iter().map(|(&id, p)| (id, p.x * sx)).collect(),
                o.iter().map(|(&id, p)| (id, p.y * sy)).collect(),
            ),
        }
    }

    /// One PA step; the `x` target is unwrapped to the copy nearest `reference`.
    fn train_frame(
        &mut self,
        intermediate: (f64, f64),
        objs: Option<&ObjectCoords>,
        actual: EquirectPoint,
        reference: f64,
    ) -> f64 {
        let (sx, sy) = self.scales();
        let (fx, fy) = self.features(objs);
        let target_x = unwrap_near(actual.x, reference, self.cfg.dims.w());
        self.pa_x.update(intermediate.0 * sx, &fx, target_x * sx);
        self.pa_y.update(intermediate.1 * sy, &fy, actual.y * sy);
        target_x
    }

    /// Initial training where each frame's intermediate is the previous
    /// frame's actual viewport.
    pub fn warmup(&mut self, actual: &[EquirectPoint], objects: &[ObjectCoords]) -> Result<()> {
        let n = self.cfg.warmup_frames;
        if actual.len() < n {
            return Err(Error::InsufficientData {
                needed: n,
                got: actual.len(),
            });
        }
        if self.is_warmed_up() {
            return Err(Error::InvalidState("session already warmed up".into()));
        }
        if self.cfg.mode != PredictorMode::ArimaOnly {
            for f in 1..n {
                let prev = actual[f - 1];
                self.train_frame((prev.x, prev.y), objects.get(f), actual[f], prev.x);
            }
        }
        self.history = actual[n - self.cfg.chunk_size..n].to_vec();
        Ok(())
    }

    /// ARIMA intermediate viewports for the next chunk, from `history`, and
    /// the seam-unwrapped last history `x` they continue from.
    fn arima_intermediates(&self) -> (Vec<(f64, f64)>, f64) {
        let cs = self.cfg.chunk_size;
        let w = self.cfg.dims.w();
        let last = self.history[self.history.len() - 1];
        let xs: Vec<f64> = self.history.iter().map(|p| p.x).collect();
        let anchor = timeseries::adjust_width(&xs, w).last().copied().unwrap_or(last.x);
        let ys: Vec<f64> = self.history.iter().map(|p| p.y).collect();
        let run = |series: &[f64], axis: Axis, order: ArimaOrder, axis_id: u64| -> Result<Vec<f64>> {
            let seed = chunk_seed(self.cfg.seed, self.chunks_observed, axis_id);
            let (t, chain) = timeseries::apply_transforms(series, axis, seed)?;
            let model = timeseries::fit(&t, order)?;
            Ok(timeseries::invert_forecast(&model.forecast(cs), &chain))
        };
        let fx = run(&xs, Axis::Horizontal { width: w }, self.cfg.order_x, 0).unwrap_or_else(|e| {
            log::warn!("x forecast fell back to persistence: {e}");
            vec![anchor; cs]
        });
        let fy = run(&ys, Axis::Vertical { limit: 2.0 * w }, self.cfg.order_y, 1).unwrap_or_else(|e| {
            log::warn!("y forecast fell back to persistence: {e}");
            vec![last.y; cs]
        });
        (fx.into_iter().zip(fy).collect(), anchor)
    }

    fn finalize(&self, x: f64, y: f64) -> EquirectPoint {
        let d = self.cfg.dims;
        let mut x = x.rem_euclid(d.w());
        if !(x < d.w()) {
            x = 0.0;
        }
        let y = if y.is_nan() { d.h() / 2.0 } else { y.clamp(0.0, d.h() - 1.0) };
        EquirectPoint::new(x, y)
    }

    /// Predicts the viewports of the next chunk. `objects[i]` holds the
    /// object positions of the chunk's i-th frame; missing frames count as
    /// having no objects.
    pub fn predict_chunk(&mut self, objects: &[ObjectCoords]) -> Result<ChunkPrediction> {
        if !self.is_warmed_up() {
            return Err(Error::InvalidState("predict_chunk before warm-up".into()));
        }
        let cs = self.cfg.chunk_size;
        let (sx, sy) = self.scales();
        let mut points = Vec::with_capacity(cs);
        let mut contrib = Vec::with_capacity(cs);
        let last = self.history[self.history.len() - 1];
        let (intermediates, anchor) = match self.cfg.mode {
            PredictorMode::Parima | PredictorMode::ArimaOnly => self.arima_intermediates(),
            PredictorMode::PaOnly => (Vec::with_capacity(cs), last.x),
        };
        let mut used = Vec::with_capacity(cs);
        let mut prev = (last.x, last.y);

        for f in 0..cs {
            let (fx, fy) = self.features(objects.get(f));
            let inter = match self.cfg.mode {
                PredictorMode::PaOnly => prev,
                _ => intermediates[f],
            };
            let (px, py) = match self.cfg.mode {
                PredictorMode::ArimaOnly => inter,
                _ => (
                    self.pa_x.predict(inter.0 * sx, &fx) / sx,
                    self.pa_y.predict(inter.1 * sy, &fy) / sy,
                ),
            };
            let p = self.finalize(px, py);
            contrib.push(match self.cfg.mode {
                PredictorMode::ArimaOnly => 0.0,
                _ => self.pa_x.object_contribution(inter.0 * sx, &fx),
            });
            used.push(inter);
            prev = (p.x, p.y);
            points.push(p);
        }
        self.pending = Some((used.clone(), anchor));
        Ok(ChunkPrediction {
            points,
            intermediates: used,
            object_contribution: contrib,
        })
    }

    /// Trains on the actual viewports of the chunk just played, in frame
    /// order, and makes them the history for the next forecast.
    pub fn observe_chunk(&mut self, actual: &[EquirectPoint], objects: &[ObjectCoords]) -> Result<()> {
        let cs = self.cfg.chunk_size;
        if actual.len() != cs {
            return Err(Error::InvalidInput(format!(
                "observed chunk has {} frames, expected {cs}",
                actual.len()
            )));
        }
        if !self.is_warmed_up() {
            return Err(Error::InvalidState("observe_chunk before warm-up".into()));
        }
        if self.pending.is_none() {
            self.predict_chunk(objects)?;
        }
        let (inters, anchor) = self.pending.take().expect("set by predict_chunk");
        if self.cfg.mode != PredictorMode::ArimaOnly {
            // targets continue the unwrapped path the intermediates live on;
            // pa_only intermediates are wrapped predictions, so unwrap near them
            let mut reference = anchor;
            for (f, (&a, &inter)) in actual.iter().zip(&inters).enumerate() {
                if self.cfg.mode == PredictorMode::PaOnly {
                    reference = inter.0;
                }
                reference = self.train_frame(inter, objects.get(f), a, reference);
            }
        }
        self.history = actual.to_vec();
        self.chunks_observed += 1;
        Ok(())
    }

    /// Object share of the `x` prediction for one frame.
    pub fn object_contribution(&self, objects: &ObjectCoords, intermediate: f64) -> f64 {
        let (sx, _) = self.scales();
        let (fx, _) = self.features(Some(objects));
        self.pa_x.object_contribution(intermediate * sx, &fx)
    }
}
