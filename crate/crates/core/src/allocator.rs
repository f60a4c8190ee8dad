//! Tile grid, player field of view, and per-chunk bitrate allocation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EquirectPoint, FrameDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tile {
    pub row: usize,
    pub col: usize,
}

impl Tile {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGrid {
    pub rows: usize,
    pub cols: usize,
    pub dims: FrameDims,
}

impl TileGrid {
    pub fn new(rows: usize, cols: usize, dims: FrameDims) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig("tile grid needs at least one row and column".into()));
        }
        if !(dims.width as usize).is_multiple_of(cols) || !(dims.height as usize).is_multiple_of(rows) {
            return Err(Error::InvalidConfig(format!(
                "{}x{} frame does not split evenly into {rows}x{cols} tiles",
                dims.width, dims.height
            )));
        }
        Ok(Self { rows, cols, dims })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tile_width(&self) -> f64 {
        (self.dims.width as usize / self.cols) as f64
    }

    pub fn tile_height(&self) -> f64 {
        (self.dims.height as usize / self.rows) as f64
    }

    pub fn tiles(&self) -> impl Iterator<Item = Tile> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| Tile::new(r, c)))
    }

    fn index(&self, t: Tile) -> usize {
        t.row * self.cols + t.col
    }

    pub fn tile_center(&self, t: Tile) -> EquirectPoint {
        EquirectPoint::new(
            (t.col as f64 + 0.5) * self.tile_width(),
            (t.row as f64 + 0.5) * self.tile_height(),
        )
    }

    /// Largest possible toroidal distance, `(rows + cols) / 2`.
    pub fn max_distance(&self) -> f64 {
        (self.rows + self.cols) as f64 / 2.0
    }
}

/// Media player viewport size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerFov {
    pub width: f64,
    pub height: f64,
}

impl Default for PlayerFov {
    fn default() -> Self {
        Self {
            width: 600.0,
            height: 300.0,
        }
    }
}

pub fn viewport_to_tile(v: EquirectPoint, grid: &TileGrid) -> Tile {
    let p = grid.dims.normalize(v);
    let row = ((p.y / grid.tile_height()).floor() as usize).min(grid.rows - 1);
    let col = ((p.x / grid.tile_width()).floor() as usize).min(grid.cols - 1);
    Tile::new(row, col)
}

/// Manhattan distance on the tile torus (both axes wrap).
pub fn tile_distance(a: Tile, b: Tile, grid: &TileGrid) -> usize {
    let dr = a.row.abs_diff(b.row);
    let dc = a.col.abs_diff(b.col);
    dr.min(grid.rows - dr) + dc.min(grid.cols - dc)
}

/// Tiles overlapping the player rectangle centered at `center`; wraps
/// horizontally, clamps vertically. Sorted row-major.
pub fn fov_tiles(center: EquirectPoint, grid: &TileGrid, fov: &PlayerFov) -> Vec<Tile> {
    let (tw, th) = (grid.tile_width(), grid.tile_height());
    let x0 = center.x - fov.width / 2.0;
    let x1 = center.x + fov.width / 2.0;
    let y0 = (center.y - fov.height / 2.0).max(0.0);
    let y1 = (center.y + fov.height / 2.0).min(grid.dims.h());

    // half-open overlap: tile [k*t, (k+1)*t) meets [a, b) iff k*t < b and (k+1)*t > a
    let first = |a: f64, t: f64| (a / t).floor() as i64;
    let last = |b: f64, t: f64| (b / t).ceil() as i64 - 1;

    let cols: Vec<usize> = {
        let (c0, c1) = (first(x0, tw), last(x1, tw));
        if c1 - c0 + 1 >= grid.cols as i64 {
            (0..grid.cols).collect()
        } else {
            let mut v: Vec<usize> =
                (c0..=c1).map(|c| c.rem_euclid(grid.cols as i64) as usize).collect();
            v.sort_unstable();
            v
        }
    };
    let rows = {
        let r0 = first(y0, th).clamp(0, grid.rows as i64 - 1);
        let r1 = last(y1, th).clamp(r0, grid.rows as i64 - 1);
        r0 as usize..=r1 as usize
    };
    rows.flat_map(|r| cols.iter().map(move |&c| Tile::new(r, c)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileAllocation {
    pub rows: usize,
    pub cols: usize,
    /// Mbps, row-major.
    pub bitrates: Vec<f64>,
    pub total: f64,
}

impl TileAllocation {
    pub fn get(&self, t: Tile) -> f64 {
        self.bitrates[t.row * self.cols + t.col]
    }

    pub fn sum(&self) -> f64 {
        self.bitrates.iter().sum()
    }

    /// Copy with every bitrate multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            bitrates: self.bitrates.iter().map(|b| b * k).collect(),
            total: self.total * k,
        }
    }
}

fn check_bitrate(total: f64) -> Result<()> {
    if !(total >= 0.0) || !total.is_finite() {
        return Err(Error::InvalidConfig(format!("preferred bitrate {total} must be >= 0")));
    }
    Ok(())
}

fn from_weights(grid: &TileGrid, weights: Vec<f64>, total: f64) -> TileAllocation {
    let sum: f64 = weights.iter().sum();
    TileAllocation {
        rows: grid.rows,
        cols: grid.cols,
        bitrates: weights.into_iter().map(|w| w / sum * total).collect(),
        total,
    }
}

/// Pyramid allocation over the per-frame `(viewport tile, FoV tiles)` of a chunk.
pub fn allocate_pyramid_frames(
    frames: &[(Tile, Vec<Tile>)],
    grid: &TileGrid,
    total: f64,
) -> Result<TileAllocation> {
    check_bitrate(total)?;
    if frames.is_empty() {
        return Err(Error::InvalidInput("pyramid allocation needs at least one frame".into()));
    }
    let max_d = grid.max_distance();
    let mut weights = vec![1.0; grid.len()];
    let mut in_fov = vec![false; grid.len()];
    for (vp, fov) in frames {
        in_fov.iter_mut().for_each(|f| *f = false);
        for &t in fov {
            in_fov[grid.index(t)] = true;
        }
        for t in grid.tiles() {
            let i = grid.index(t);
            if t == *vp {
                weights[i] += 1.0;
                continue;
            }
            let d = tile_distance(*vp, t, grid) as f64;
            weights[i] += if in_fov[i] {
                1.0 - d / (2.0 * max_d)
            } else {
                1.0 - d / max_d
            };
        }
    }
    Ok(from_weights(grid, weights, total))
}

/// Pyramid allocation from predicted viewport points; the FoV of each frame is
/// centered on that frame's point.
pub fn allocate_pyramid(
    predicted: &[EquirectPoint],
    grid: &TileGrid,
    fov: &PlayerFov,
    total: f64,
) -> Result<TileAllocation> {
    let frames: Vec<(Tile, Vec<Tile>)> = predicted
        .iter()
        .map(|&p| (viewport_to_tile(p, grid), fov_tiles(p, grid, fov)))
        .collect();
    allocate_pyramid_frames(&frames, grid, total)
}

/// Pyramid allocation when only tiles are known; FoV centered on tile centers.
pub fn allocate_pyramid_tiles(
    predicted: &[Tile],
    grid: &TileGrid,
    fov: &PlayerFov,
    total: f64,
) -> Result<TileAllocation> {
    let frames: Vec<(Tile, Vec<Tile>)> = predicted
        .iter()
        .map(|&t| (t, fov_tiles(grid.tile_center(t), grid, fov)))
        .collect();
    allocate_pyramid_frames(&frames, grid, total)
}

/// Uniform `total / (rows * cols)` on every tile.
pub fn allocate_naba(grid: &TileGrid, total: f64) -> Result<TileAllocation> {
    check_bitrate(total)?;
    Ok(from_weights(grid, vec![1.0; grid.len()], total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid8() -> TileGrid {
        TileGrid::new(8, 8, FrameDims::new(3840, 1920).unwrap()).unwrap()
    }

    #[test]
    fn grid_must_divide_frame() {
        let dims = FrameDims::new(3840, 1920).unwrap();
        assert!(TileGrid::new(7, 8, dims).is_err());
        assert!(TileGrid::new(0, 8, dims).is_err());
    }

    #[test]
    fn viewport_tiles() {
        let g = grid8();
        assert_eq!(viewport_to_tile(EquirectPoint::new(0., 0.), &g), Tile::new(0, 0));
        assert_eq!(viewport_to_tile(EquirectPoint::new(3839., 1919.), &g), Tile::new(7, 7));
        assert_eq!(viewport_to_tile(EquirectPoint::new(500., 500.), &g), Tile::new(2, 1));
    }

    #[test]
    fn toroidal_distance() {
        let g = grid8();
        assert_eq!(tile_distance(Tile::new(3, 3), Tile::new(3, 3), &g), 0);
        assert_eq!(tile_distance(Tile::new(0, 0), Tile::new(7, 7), &g), 2);
        assert_eq!(tile_distance(Tile::new(0, 0), Tile::new(4, 4), &g), 8);
        assert_eq!(g.max_distance(), 8.0);
    }

    #[test]
    fn fov_membership() {
        let g = grid8();
        let small = PlayerFov { width: 100., height: 50. };
        assert_eq!(fov_tiles(EquirectPoint::new(720., 360.), &g, &small), vec![Tile::new(1, 1)]);

        // 600x300 centered on the corner shared by tiles (0,0),(0,1),(1,0),(1,1)
        let t = fov_tiles(EquirectPoint::new(480., 240.), &g, &PlayerFov::default());
        assert_eq!(
            t,
            vec![Tile::new(0, 0), Tile::new(0, 1), Tile::new(1, 0), Tile::new(1, 1)]
        );

        let t = fov_tiles(EquirectPoint::new(0., 960.), &g, &PlayerFov::default());
        assert!(t.contains(&Tile::new(4, 0)) && t.contains(&Tile::new(4, 7)));

        let huge = PlayerFov { width: 10_000., height: 10_000. };
        assert_eq!(fov_tiles(EquirectPoint::new(5., 5.), &g, &huge).len(), 64);
    }

    #[test]
    fn pyramid_two_by_two() {
        let g = TileGrid::new(2, 2, FrameDims::new(4, 2).unwrap()).unwrap();
        let a = allocate_pyramid_frames(&[(Tile::new(0, 0), vec![Tile::new(0, 0)])], &g, 8.0)
            .unwrap();
        let expected = [16. / 6., 2., 2., 8. / 6.];
        for (b, e) in a.bitrates.iter().zip(expected) {
            assert_abs_diff_eq!(*b, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn pyramid_zero_budget() {
        let a = allocate_pyramid(&[EquirectPoint::new(10., 10.)], &grid8(), &PlayerFov::default(), 0.0)
            .unwrap();
        assert!(a.bitrates.iter().all(|&b| b == 0.0));
        assert!(allocate_pyramid(&[], &grid8(), &PlayerFov::default(), 8.0).is_err());
        assert!(allocate_naba(&grid8(), -1.0).is_err());
    }

    #[test]
    fn pyramid_uniform_when_all_tiles_predicted_with_full_fov() {
        let g = grid8();
        let everything: Vec<Tile> = g.tiles().collect();
        let frames: Vec<(Tile, Vec<Tile>)> =
            g.tiles().map(|t| (t, everything.clone())).collect();
        let a = allocate_pyramid_frames(&frames, &g, 8.0).unwrap();
        let naba = allocate_naba(&g, 8.0).unwrap();
        for (x, y) in a.bitrates.iter().zip(&naba.bitrates) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn pyramid_peak_and_decay() {
        let g = grid8();
        let vp = Tile::new(3, 5);
        let a = allocate_pyramid_tiles(&[vp; 30], &g, &PlayerFov::default(), 8.0).unwrap();
        let peak = a.get(vp);
        let fov = fov_tiles(g.tile_center(vp), &g, &PlayerFov::default());
        for t in g.tiles().filter(|&t| t != vp) {
            assert!(a.get(t) < peak);
            for u in g.tiles().filter(|&u| u != vp) {
                if fov.contains(&t) == fov.contains(&u)
                    && tile_distance(vp, t, &g) < tile_distance(vp, u, &g)
                {
                    assert!(a.get(t) >= a.get(u));
                }
            }
        }
    }

    #[test]
    fn naba_values() {
        let a = allocate_naba(&grid8(), 8.0).unwrap();
        assert!(a.bitrates.iter().all(|&b| b == 0.125));
        assert_eq!(a.sum(), 8.0);
        let one = TileGrid::new(1, 1, FrameDims::new(3840, 1920).unwrap()).unwrap();
        assert_eq!(allocate_naba(&one, 8.0).unwrap().bitrates, vec![8.0]);
    }
}
