//! Chunk-by-chunk streaming simulation of one viewer under one variant.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Variant};
use crate::allocator::{allocate_naba, allocate_pyramid, TileAllocation};
use crate::error::{Error, Result};
use crate::geometry::EquirectPoint;
use crate::metrics::{aggregate_qoe, ChunkRecord, QoeReport};
use crate::predictor::{ObjectCoords, PredictorSession};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub chunk: usize,
    pub frame: usize,
    pub pred_x: f64,
    pub pred_y: f64,
    pub actual_x: f64,
    pub actual_y: f64,
    pub obj_contrib: f64,
}

/// Wall-clock cost of each step of a chunk, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkTiming {
    pub chunk: usize,
    pub update_ms: f64,
    pub predict_ms: f64,
    pub allocate_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub qoe: QoeReport,
    /// Empty for the non-predictive baseline.
    pub predictions: Vec<PredictionRow>,
    pub allocations: Vec<TileAllocation>,
    pub timings: Vec<ChunkTiming>,
    pub frames_consumed: usize,
}

/// Deterministic per-run numbers; no timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: Variant,
    pub seed: u64,
    pub chunks: usize,
    pub frames: usize,
    pub q: f64,
    pub mean_q1: f64,
    pub mean_tile_error: Option<f64>,
    pub mean_object_contribution: Option<f64>,
}

impl RunReport {
    pub fn chunks(&self) -> usize {
        self.qoe.chunks.len()
    }

    /// Mean object share over predicted frames with index `>= from_frame`.
    pub fn mean_object_contribution(&self, from_frame: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .predictions
            .iter()
            .filter(|r| r.frame >= from_frame)
            .map(|r| r.obj_contrib)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn summary(&self) -> RunSummary {
        let n = self.qoe.chunks.len().max(1) as f64;
        RunSummary {
            variant: self.config.variant,
            seed: self.config.seed,
            chunks: self.chunks(),
            frames: self.frames_consumed,
            q: self.qoe.q,
            mean_q1: self.qoe.chunks.iter().map(|c| c.q1).sum::<f64>() / n,
            mean_tile_error: self.qoe.mean_tile_error,
            mean_object_contribution: self.mean_object_contribution(0),
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Streams `viewports` chunk by chunk: warm-up on the first
/// `warmup_frames`, then for each full chunk predict, allocate, play and
/// train. `objects[f]` holds the object positions of frame `f`; frames past
/// its end have no objects. A trailing partial chunk is ignored.
pub fn run_experiment(cfg: &ExperimentConfig, viewports: &[EquirectPoint], objects: &[ObjectCoords]) -> Result<RunReport> {
    cfg.validate()?;
    let dims = cfg.dims()?;
    let grid = cfg.grid()?;
    let fov = cfg.fov();
    let warm = cfg.warmup_frames();
    let cs = cfg.chunk_size();
    if let Some((f, p)) = viewports.iter().enumerate().find(|(_, p)| !dims.contains(**p)) {
        return Err(Error::InvalidInput(format!("viewport at frame {f} is outside the frame: ({}, {})", p.x, p.y)));
    }
    if viewports.len() < warm + cs {
        return Err(Error::InsufficientData {
            needed: warm + cs,
            got: viewports.len(),
        });
    }
    let n_chunks = (viewports.len() - warm) / cs;
    let objs_at = |range: std::ops::Range<usize>| -> Vec<ObjectCoords> {
        range.map(|f| objects.get(f).cloned().unwrap_or_default()).collect()
    };

    let mut session = match cfg.variant.predictor_mode() {
        Some(mode) => {
            let mut s = PredictorSession::new(cfg.session_config(mode)?)?;
            s.warmup(&viewports[..warm], &objs_at(0..warm))?;
            Some(s)
        }
        None => None,
    };

    let mut records = Vec::with_capacity(n_chunks);
    let mut predictions = Vec::new();
    let mut allocations = Vec::with_capacity(n_chunks);
    let mut timings = Vec::with_capacity(n_chunks);
    for k in 0..n_chunks {
        let start = warm + k * cs;
        let frames = start..start + cs;
        let actual = &viewports[frames.clone()];
        let chunk_objs = objs_at(frames.clone());

        let t = Instant::now();
        let pred = match session.as_mut() {
            Some(s) => Some(s.predict_chunk(&chunk_objs)?),
            None => None,
        };
        let predict_ms = ms(t);

        let t = Instant::now();
        let alloc = match &pred {
            Some(p) => allocate_pyramid(&p.points, &grid, &fov, cfg.bitrate_mbps)?,
            None => allocate_naba(&grid, cfg.bitrate_mbps)?,
        };
        let allocate_ms = ms(t);

        let t = Instant::now();
        if let Some(s) = session.as_mut() {
            s.observe_chunk(actual, &chunk_objs)?;
        }
        let update_ms = ms(t);

        if let Some(p) = &pred {
            for (i, f) in frames.clone().enumerate() {
                predictions.push(PredictionRow {
                    chunk: k,
                    frame: f,
                    pred_x: p.points[i].x,
                    pred_y: p.points[i].y,
                    actual_x: actual[i].x,
                    actual_y: actual[i].y,
                    obj_contrib: p.object_contribution[i],
                });
            }
        }
        records.push(ChunkRecord {
            chunk: k,
            actual: actual.to_vec(),
            predicted: pred.map(|p| p.points).unwrap_or_default(),
            allocation: alloc.clone(),
            fov,
            grid,
        });
        allocations.push(alloc);
        timings.push(ChunkTiming {
            chunk: k,
            update_ms,
            predict_ms,
            allocate_ms,
        });
    }

    let frames_consumed = warm + n_chunks * cs;
    debug_assert_eq!(frames_consumed, warm + records.iter().map(|r| r.actual.len()).sum::<usize>());
    Ok(RunReport {
        config: cfg.clone(),
        qoe: aggregate_qoe(&records)?,
        predictions,
        allocations,
        timings,
        frames_consumed,
    })
}

/// Runs every variant on the same viewer and returns the summaries in the
/// order given.
pub fn compare_variants(
    cfg: &ExperimentConfig,
    variants: &[Variant],
    viewports: &[EquirectPoint],
    objects: &[ObjectCoords],
) -> Result<Vec<RunSummary>> {
    variants
        .iter()
        .map(|&v| {
            let c = ExperimentConfig { variant: v, ..cfg.clone() };
            run_experiment(&c, viewports, objects).map(|r| r.summary())
        })
        .collect()
}
