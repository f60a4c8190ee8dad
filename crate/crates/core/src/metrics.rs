//! Tile error and the per-chunk QoE terms.
//!
//! Q1 is the viewport bitrate level, Q2 the spread within the viewport, Q3
//! the spread across frames of a chunk and Q4 the change of Q1 between
//! consecutive chunks. The aggregate is `sum(Q1 - Q2 - Q3) - sum(Q4)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::allocator::{fov_tiles, tile_distance, viewport_to_tile, PlayerFov, Tile, TileAllocation, TileGrid};
use crate::error::{Error, Result};
use crate::geometry::EquirectPoint;

pub const QOE_SCHEMA_VERSION: u32 = 1;

pub fn manhattan_tile_error(actual: Tile, predicted: Tile, grid: &TileGrid) -> usize {
    tile_distance(actual, predicted, grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkRecord {
    pub chunk: usize,
    pub actual: Vec<EquirectPoint>,
    /// Same length as `actual`, or empty when the variant makes no prediction.
    pub predicted: Vec<EquirectPoint>,
    pub allocation: TileAllocation,
    pub fov: PlayerFov,
    pub grid: TileGrid,
}

fn population_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

impl ChunkRecord {
    /// Number of distinct actual viewport-center tiles.
    pub fn distinct_viewport_tiles(&self) -> usize {
        self.actual
            .iter()
            .map(|&p| viewport_to_tile(p, &self.grid))
            .collect::<BTreeSet<_>>()
            .len()
    }

    fn frame_fov_bitrates(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.actual.iter().map(|&p| {
            fov_tiles(p, &self.grid, &self.fov)
                .into_iter()
                .map(|t| self.allocation.get(t))
                .collect()
        })
    }

    fn frame_means(&self) -> Vec<f64> {
        self.frame_fov_bitrates()
            .map(|b| b.iter().sum::<f64>() / b.len() as f64)
            .collect()
    }

    fn norm(&self) -> f64 {
        self.distinct_viewport_tiles().max(1) as f64
    }

    pub fn tile_errors(&self) -> Vec<usize> {
        self.actual
            .iter()
            .zip(&self.predicted)
            .map(|(&a, &p)| {
                manhattan_tile_error(viewport_to_tile(a, &self.grid), viewport_to_tile(p, &self.grid), &self.grid)
            })
            .collect()
    }
}

pub fn q1(rec: &ChunkRecord) -> f64 {
    rec.frame_means().iter().sum::<f64>() / rec.norm()
}

pub fn q2(rec: &ChunkRecord) -> f64 {
    rec.frame_fov_bitrates().map(|b| population_std(&b)).sum::<f64>() / rec.norm()
}

pub fn q3(rec: &ChunkRecord) -> f64 {
    population_std(&rec.frame_means()) / rec.norm()
}

pub fn q4(q1_curr: f64, q1_prev: f64) -> f64 {
    (q1_curr - q1_prev).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkQoe {
    pub chunk: usize,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// Zero for the first chunk.
    pub q4: f64,
    pub tile_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoeReport {
    pub schema_version: u32,
    pub chunks: Vec<ChunkQoe>,
    pub q: f64,
    /// Mean over all predicted frames; `None` when nothing was predicted.
    pub mean_tile_error: Option<f64>,
}

pub fn aggregate_qoe(records: &[ChunkRecord]) -> Result<QoeReport> {
    if records.is_empty() {
        return Err(Error::InvalidInput("QoE needs at least one chunk".into()));
    }
    let mut chunks: Vec<ChunkQoe> = Vec::with_capacity(records.len());
    let (mut err_sum, mut err_n) = (0usize, 0usize);
    let mut prev_level: Option<f64> = None;
    for rec in records {
        if rec.actual.is_empty() {
            return Err(Error::InvalidInput(format!("chunk {} has no frames", rec.chunk)));
        }
        let errs = rec.tile_errors();
        err_sum += errs.iter().sum::<usize>();
        err_n += errs.len();
        let q1v = q1(rec);
        // the previous chunk is renormalized with this chunk's n_c and frame
        // count, so only a change of viewport bitrate counts
        let scale = rec.actual.len() as f64 / rec.norm();
        let q4v = prev_level.map_or(0.0, |l| q4(q1v, l * scale));
        prev_level = Some(q1v / scale);
        chunks.push(ChunkQoe {
            chunk: rec.chunk,
            q1: q1v,
            q2: q2(rec),
            q3: q3(rec),
            q4: q4v,
            tile_error: (!errs.is_empty())
                .then(|| errs.iter().sum::<usize>() as f64 / errs.len() as f64),
        });
    }
    let q = chunks.iter().map(|c| c.q1 - c.q2 - c.q3).sum::<f64>()
        - chunks.iter().skip(1).map(|c| c.q4).sum::<f64>();
    Ok(QoeReport {
        schema_version: QOE_SCHEMA_VERSION,
        chunks,
        q,
        mean_tile_error: (err_n > 0).then(|| err_sum as f64 / err_n as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::allocate_naba;
    use crate::geometry::FrameDims;
    use approx::assert_abs_diff_eq;

    fn grid8() -> TileGrid {
        TileGrid::new(8, 8, FrameDims::new(3840, 1920).unwrap()).unwrap()
    }

    fn record(actual: Vec<EquirectPoint>, allocation: TileAllocation, fov: PlayerFov) -> ChunkRecord {
        ChunkRecord {
            chunk: 0,
            actual,
            predicted: vec![],
            allocation,
            fov,
            grid: grid8(),
        }
    }

    #[test]
    fn tile_error_wraps() {
        let g = grid8();
        assert_eq!(manhattan_tile_error(Tile::new(2, 2), Tile::new(2, 2), &g), 0);
        assert_eq!(manhattan_tile_error(Tile::new(0, 0), Tile::new(0, 7), &g), 1);
    }

    #[test]
    fn q1_naba_single_frame() {
        let alloc = allocate_naba(&grid8(), 8.0).unwrap();
        // corner-centered player covers 4 tiles
        let rec = record(vec![EquirectPoint::new(480., 240.)], alloc, PlayerFov::default());
        assert_eq!(rec.distinct_viewport_tiles(), 1);
        assert_abs_diff_eq!(q1(&rec), 0.125, epsilon = 1e-15);
        assert_eq!(q2(&rec), 0.0);
        assert_eq!(q3(&rec), 0.0);
    }

    #[test]
    fn q1_uniform_closed_form() {
        let alloc = allocate_naba(&grid8(), 8.0).unwrap();
        let actual: Vec<EquirectPoint> =
            (0..30).map(|i| EquirectPoint::new(100. + 60. * i as f64, 900.)).collect();
        let rec = record(actual, alloc, PlayerFov::default());
        let n_c = rec.distinct_viewport_tiles() as f64;
        assert_abs_diff_eq!(q1(&rec), 30.0 * 0.125 / n_c, epsilon = 1e-12);
        assert_abs_diff_eq!(q2(&rec), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q3(&rec), 0.0, epsilon = 1e-15);
        let zero = record(vec![EquirectPoint::new(5., 5.)], allocate_naba(&grid8(), 0.0).unwrap(), PlayerFov::default());
        assert_eq!(q1(&zero), 0.0);
    }

    fn two_tile_alloc() -> TileAllocation {
        // tile (4,3) = 2 Mbps, (4,4) = 4 Mbps, everything else 0
        let mut bitrates = vec![0.0; 64];
        bitrates[4 * 8 + 3] = 2.0;
        bitrates[4 * 8 + 4] = 4.0;
        TileAllocation { rows: 8, cols: 8, bitrates, total: 6.0 }
    }

    #[test]
    fn q2_two_tile_fov() {
        // 200x100 player at the (4,3)/(4,4) border, mid-row
        let fov = PlayerFov { width: 200., height: 100. };
        let rec = record(vec![EquirectPoint::new(1920., 1080.)], two_tile_alloc(), fov);
        assert_eq!(fov_tiles(rec.actual[0], &rec.grid, &fov).len(), 2);
        assert_abs_diff_eq!(q2(&rec), 1.0, epsilon = 1e-15);
        // single-tile FoV
        let rec = record(vec![EquirectPoint::new(1700., 1080.)], two_tile_alloc(), fov);
        assert_eq!(q2(&rec), 0.0);
    }

    #[test]
    fn q3_across_frames() {
        let fov = PlayerFov { width: 10., height: 10. };
        let rec = record(
            vec![EquirectPoint::new(1700., 1080.), EquirectPoint::new(2100., 1080.)],
            two_tile_alloc(),
            fov,
        );
        // per-frame means [2, 4], stddev 1, two distinct tiles
        assert_abs_diff_eq!(q3(&rec), 0.5, epsilon = 1e-15);
        let same = record(vec![EquirectPoint::new(1700., 1080.); 5], two_tile_alloc(), fov);
        assert_eq!(q3(&same), 0.0);
    }

    #[test]
    fn q4_is_absolute_difference() {
        assert_eq!(q4(2.0, 2.0), 0.0);
        assert_eq!(q4(3.0, 2.5), 0.5);
        assert_eq!(q4(2.5, 3.0), q4(3.0, 2.5));
    }

    #[test]
    fn uniform_q4_ignores_viewport_spread() {
        let alloc = allocate_naba(&grid8(), 8.0).unwrap();
        let fov = PlayerFov::default();
        // one tile, then three tiles: n_c differs but the bitrate does not
        let mut a = record(vec![EquirectPoint::new(100., 100.); 3], alloc.clone(), fov);
        a.chunk = 0;
        let xs = [100., 700., 1300.];
        let mut b = record(xs.iter().map(|&x| EquirectPoint::new(x, 100.)).collect(), alloc, fov);
        b.chunk = 1;
        assert_ne!(q1(&a), q1(&b));
        let r = aggregate_qoe(&[a, b]).unwrap();
        assert_eq!(r.chunks[1].q4, 0.0);
        assert_eq!(r.q, r.chunks.iter().map(|c| c.q1).sum::<f64>());
    }

    #[test]
    fn q4_matches_plain_difference_when_normalizers_agree() {
        let fov = PlayerFov { width: 10., height: 10. };
        let a = record(vec![EquirectPoint::new(1700., 1080.)], two_tile_alloc(), fov);
        let mut b = record(vec![EquirectPoint::new(2100., 1080.)], two_tile_alloc(), fov);
        b.chunk = 1;
        let r = aggregate_qoe(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(r.chunks[1].q4, q4(q1(&b), q1(&a)));
    }

    #[test]
    fn aggregate_two_chunks_by_hand() {
        let fov = PlayerFov { width: 10., height: 10. };
        let mut a = record(
            vec![EquirectPoint::new(1700., 1080.), EquirectPoint::new(2100., 1080.)],
            two_tile_alloc(),
            fov,
        );
        a.predicted = vec![EquirectPoint::new(1700., 1080.), EquirectPoint::new(1700., 1080.)];
        let mut b = record(vec![EquirectPoint::new(2100., 1080.)], two_tile_alloc(), fov);
        b.chunk = 1;
        // chunk 0: q1 = (2 + 4)/2 = 3, q2 = 0, q3 = 0.5
        // chunk 1: q1 = 4, q2 = 0, q3 = 0, q4 = |4 - 6/2| = 1
        let r = aggregate_qoe(&[a.clone(), b]).unwrap();
        assert_abs_diff_eq!(r.q, (3.0 - 0.5) + 4.0 - 1.0, epsilon = 1e-12);
        assert_eq!(r.chunks[0].q4, 0.0);
        assert_eq!(r.chunks[1].q4, 1.0);
        // errors: frame 0 exact, frame 1 one column off
        assert_eq!(r.mean_tile_error, Some(0.5));

        let one = aggregate_qoe(&[a]).unwrap();
        assert_abs_diff_eq!(one.q, 3.0 - 0.5, epsilon = 1e-12);
        assert!(aggregate_qoe(&[]).is_err());
    }
}
