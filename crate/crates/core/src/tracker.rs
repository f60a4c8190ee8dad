//! Spherical centroid tracker.
//!
//! Detections are matched to active tracks by mutual-nearest central angle on
//! the sphere, so an object crossing the equirectangular seam keeps its ID.
//! A track survives up to `deactivate_after` consecutive missed frames; when
//! it is matched again the missed frames are filled by linear interpolation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pixel_angles, EquirectPoint, FrameDims, SphericalPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    /// Box crosses the vertical seam: it spans `x_min -> width -> 0 -> x_max`.
    pub wrap: bool,
}

impl Detection {
    pub fn new(frame: usize, x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            frame,
            x_min,
            y_min,
            x_max,
            y_max,
            wrap: x_max < x_min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackState {
    Active,
    Deactivated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTrack {
    pub id: u32,
    /// `(frame, centroid)`, frames strictly increasing.
    pub points: Vec<(usize, EquirectPoint)>,
    pub state: TrackState,
    pub missing_streak: usize,
}

impl ObjectTrack {
    pub fn first_frame(&self) -> usize {
        self.points[0].0
    }

    pub fn last_frame(&self) -> usize {
        self.points[self.points.len() - 1].0
    }

    fn last_point(&self) -> EquirectPoint {
        self.points[self.points.len() - 1].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub deactivate_after: usize,
    pub max_match_angle: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            deactivate_after: 30,
            max_match_angle: PI,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deactivate_after < 1 {
            return Err(Error::InvalidConfig("deactivate_after must be >= 1".into()));
        }
        if !(self.max_match_angle >= 0.0) {
            return Err(Error::InvalidConfig("max_match_angle must be >= 0".into()));
        }
        Ok(())
    }
}

/// Signed shortest horizontal offset from `from` to `to` on a frame of `width`.
pub(crate) fn seam_delta(from: f64, to: f64, width: f64) -> f64 {
    let d = (to - from).rem_euclid(width);
    if d > width / 2.0 {
        d - width
    } else {
        d
    }
}

pub fn centroid(d: &Detection, dims: FrameDims) -> EquirectPoint {
    let y = 0.5 * (d.y_min + d.y_max);
    let x = if d.wrap {
        let w = dims.w();
        let mid = d.x_min + 0.5 * seam_delta(d.x_min, d.x_max, w);
        dims.normalize(EquirectPoint::new(mid, 0.0)).x
    } else {
        0.5 * (d.x_min + d.x_max)
    };
    EquirectPoint::new(x, y)
}

/// Central angle between two pixels on the unit sphere.
pub fn angular_distance(a: EquirectPoint, b: EquirectPoint, dims: FrameDims) -> f64 {
    let (ta, pa) = pixel_angles(a, dims);
    let (tb, pb) = pixel_angles(b, dims);
    let u = SphericalPoint::unit(ta, pa).direction();
    let v = SphericalPoint::unit(tb, pb).direction();
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    // same angle as acos(clamp(cos)), without the precision loss near 0
    sin.atan2(cos)
}

/// Mutual-nearest pairs between `current` and `active`, as `(current_idx, active_idx)`.
///
/// Ties go to the lower index on both sides.
pub fn mutual_nearest(
    current: &[EquirectPoint],
    active: &[EquirectPoint],
    dims: FrameDims,
    max_angle: f64,
) -> Vec<(usize, usize)> {
    if current.is_empty() || active.is_empty() {
        return Vec::new();
    }
    let dist: Vec<Vec<f64>> = current
        .iter()
        .map(|&c| active.iter().map(|&a| angular_distance(c, a, dims)).collect())
        .collect();
    let argmin = |vals: &mut dyn Iterator<Item = f64>| {
        let mut best = (0usize, f64::INFINITY);
        for (i, v) in vals.enumerate() {
            if v < best.1 {
                best = (i, v);
            }
        }
        best.0
    };
    let best_for_active: Vec<usize> = (0..active.len())
        .map(|j| argmin(&mut dist.iter().map(|row| row[j])))
        .collect();
    (0..current.len())
        .filter_map(|i| {
            let j = argmin(&mut dist[i].iter().copied());
            (best_for_active[j] == i && dist[i][j] <= max_angle).then_some((i, j))
        })
        .collect()
}

/// Online tracker state.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    dims: FrameDims,
    tracks: Vec<ObjectTrack>,
    last_frame: Option<usize>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig, dims: FrameDims) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            dims,
            tracks: Vec::new(),
            last_frame: None,
        })
    }

    pub fn tracks(&self) -> &[ObjectTrack] {
        &self.tracks
    }

    /// Processes one frame. Returns `(detection index, track id)` for every detection.
    ///
    /// Frames must be strictly increasing; skipped frame numbers count as
    /// frames with no detections.
    pub fn step(&mut self, frame: usize, detections: &[Detection]) -> Result<Vec<(usize, u32)>> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::InvalidInput(format!(
                    "frame {frame} does not follow frame {last}"
                )));
            }
            for _ in last + 1..frame {
                self.miss_all(&[]);
            }
        }
        if let Some(d) = detections.iter().find(|d| d.frame != frame) {
            return Err(Error::InvalidInput(format!(
                "detection for frame {} passed to step for frame {frame}",
                d.frame
            )));
        }
        self.last_frame = Some(frame);

        let current: Vec<EquirectPoint> =
            detections.iter().map(|d| centroid(d, self.dims)).collect();
        let active_idx: Vec<usize> = self
            .tracks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.state == TrackState::Active)
            .map(|(i, _)| i)
            .collect();
        let active_pts: Vec<EquirectPoint> =
            active_idx.iter().map(|&i| self.tracks[i].last_point()).collect();

        let pairs = mutual_nearest(&current, &active_pts, self.dims, self.cfg.max_match_angle);

        let mut assigned: Vec<Option<u32>> = vec![None; current.len()];
        let mut matched_tracks = Vec::with_capacity(pairs.len());
        for (ci, aj) in pairs {
            let ti = active_idx[aj];
            self.extend_track(ti, frame, current[ci]);
            assigned[ci] = Some(self.tracks[ti].id);
            matched_tracks.push(ti);
        }
        self.miss_all(&matched_tracks);

        for (ci, slot) in assigned.iter_mut().enumerate() {
            if slot.is_none() {
                let id = self.tracks.len() as u32;
                self.tracks.push(ObjectTrack {
                    id,
                    points: vec![(frame, current[ci])],
                    state: TrackState::Active,
                    missing_streak: 0,
                });
                *slot = Some(id);
            }
        }
        Ok(assigned
            .into_iter()
            .enumerate()
            .map(|(i, id)| (i, id.expect("every detection is assigned")))
            .collect())
    }

    fn extend_track(&mut self, ti: usize, frame: usize, c: EquirectPoint) {
        let w = self.dims.w();
        let track = &mut self.tracks[ti];
        let (f0, p0) = track.points[track.points.len() - 1];
        let span = (frame - f0) as f64;
        let dx = seam_delta(p0.x, c.x, w);
        let dy = c.y - p0.y;
        for f in f0 + 1..frame {
            let t = (f - f0) as f64 / span;
            let p = EquirectPoint::new(p0.x + t * dx, p0.y + t * dy);
            track.points.push((f, self.dims.normalize(p)));
        }
        track.points.push((frame, c));
        track.missing_streak = 0;
    }

    fn miss_all(&mut self, matched: &[usize]) {
        let limit = self.cfg.deactivate_after;
        for (i, t) in self.tracks.iter_mut().enumerate() {
            if t.state == TrackState::Active && !matched.contains(&i) {
                t.missing_streak += 1;
                if t.missing_streak > limit {
                    t.state = TrackState::Deactivated;
                }
            }
        }
    }

    pub fn finish(self) -> Vec<ObjectTrack> {
        self.tracks
    }
}

/// Runs the tracker over a detection list ordered by frame.
pub fn run_tracker(
    detections: &[Detection],
    dims: FrameDims,
    cfg: TrackerConfig,
) -> Result<Vec<ObjectTrack>> {
    let mut tracker = Tracker::new(cfg, dims)?;
    if let Some(w) = detections.windows(2).find(|w| w[1].frame < w[0].frame) {
        return Err(Error::InvalidInput(format!(
            "detections out of order: frame {} after {}",
            w[1].frame, w[0].frame
        )));
    }
    for group in detections.chunk_by(|a, b| a.frame == b.frame) {
        tracker.step(group[0].frame, group)?;
    }
    Ok(tracker.finish())
}

/// Flattens tracks into `(frame, id, centroid)` rows ordered by frame then id.
pub fn trajectory_rows(tracks: &[ObjectTrack]) -> Vec<(usize, u32, EquirectPoint)> {
    let mut rows: Vec<_> = tracks
        .iter()
        .flat_map(|t| t.points.iter().map(move |&(f, p)| (f, t.id, p)))
        .collect();
    rows.sort_by_key(|&(f, id, _)| (f, id));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dims() -> FrameDims {
        FrameDims::new(3840, 1920).unwrap()
    }

    fn point_det(frame: usize, x: f64, y: f64) -> Detection {
        Detection::new(frame, x, y, x, y)
    }

    #[test]
    fn centroid_midpoint_zero_area_and_wrap() {
        let c = centroid(&Detection::new(0, 10., 10., 30., 50.), dims());
        assert_eq!((c.x, c.y), (20., 30.));
        let c = centroid(&Detection::new(0, 5., 5., 5., 5.), dims());
        assert_eq!((c.x, c.y), (5., 5.));
        let d = Detection::new(0, 3830., 10., 10., 20.);
        assert!(d.wrap);
        // arc 3830 -> 3850 (== 10); midpoint 3840 == 0
        let c = centroid(&d, dims());
        assert_abs_diff_eq!(c.x, 0.0);
        assert_eq!(c.y, 15.0);
    }

    #[test]
    fn angular_distance_cases() {
        let d = dims();
        let a = EquirectPoint::new(700., 300.);
        assert_eq!(angular_distance(a, a, d), 0.0);
        // (theta, phi) -> (theta + pi, -phi)
        let b = EquirectPoint::new(700. + 1920., 1920. - 300.);
        assert_abs_diff_eq!(angular_distance(a, b, d), PI, epsilon = 1e-12);
        let l = EquirectPoint::new(3835., 960.);
        let r = EquirectPoint::new(5., 960.);
        let expected = 2.0 * PI * 10.0 / 3840.0;
        assert_abs_diff_eq!(angular_distance(l, r, d), expected, epsilon = 1e-12);
    }

    #[test]
    fn nearby_detection_keeps_id() {
        let mut t = Tracker::new(TrackerConfig::default(), dims()).unwrap();
        assert_eq!(t.step(0, &[point_det(0, 1920., 960.)]).unwrap(), vec![(0, 0)]);
        assert_eq!(t.step(1, &[point_det(1, 1922., 960.)]).unwrap(), vec![(0, 0)]);
    }

    #[test]
    fn seam_crossing_keeps_id() {
        let d = dims();
        let last = EquirectPoint::new(3835., 900.);
        let next = EquirectPoint::new(3., 900.);
        // a far competitor that is nearer in raw pixel x
        let other = EquirectPoint::new(600., 900.);
        assert!(angular_distance(last, next, d) < angular_distance(other, next, d));
        let mut t = Tracker::new(TrackerConfig::default(), d).unwrap();
        t.step(0, &[point_det(0, last.x, last.y), point_det(0, other.x, other.y)])
            .unwrap();
        let ids = t
            .step(1, &[point_det(1, next.x, next.y), point_det(1, 602., 900.)])
            .unwrap();
        assert_eq!(ids, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn long_absence_spawns_new_id() {
        let mut t = Tracker::new(TrackerConfig::default(), dims()).unwrap();
        t.step(0, &[point_det(0, 100., 100.)]).unwrap();
        // 31 missed frames (1..=31), reappears at 32
        let ids = t.step(32, &[point_det(32, 100., 100.)]).unwrap();
        assert_eq!(ids, vec![(0, 1)]);
        assert_eq!(t.tracks()[0].state, TrackState::Deactivated);

        let mut t = Tracker::new(TrackerConfig::default(), dims()).unwrap();
        t.step(0, &[point_det(0, 100., 100.)]).unwrap();
        // 30 missed frames is still within the window
        let ids = t.step(31, &[point_det(31, 100., 100.)]).unwrap();
        assert_eq!(ids, vec![(0, 0)]);
        assert_eq!(t.tracks()[0].points.len(), 32);
    }

    #[test]
    fn gap_is_linearly_interpolated() {
        let mut dets = vec![point_det(0, 100., 200.)];
        dets.push(point_det(6, 160., 260.));
        let tracks = run_tracker(&dets, dims(), TrackerConfig::default()).unwrap();
        assert_eq!(tracks.len(), 1);
        let pts = &tracks[0].points;
        assert_eq!(pts.len(), 7);
        for (k, &(f, p)) in pts.iter().enumerate() {
            assert_eq!(f, k);
            assert_abs_diff_eq!(p.x, 100. + 10. * k as f64, epsilon = 1e-9);
            assert_abs_diff_eq!(p.y, 200. + 10. * k as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn gap_across_seam_takes_short_arc() {
        let dets = vec![point_det(0, 3830., 500.), point_det(4, 10., 500.)];
        let tracks = run_tracker(&dets, dims(), TrackerConfig::default()).unwrap();
        let xs: Vec<f64> = tracks[0].points.iter().map(|p| p.1.x).collect();
        let expected = [3830., 3835., 0., 5., 10.];
        for (x, e) in xs.iter().zip(expected) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn empty_and_out_of_order() {
        assert!(run_tracker(&[], dims(), TrackerConfig::default())
            .unwrap()
            .is_empty());
        let dets = vec![point_det(3, 1., 1.), point_det(1, 1., 1.)];
        assert!(matches!(
            run_tracker(&dets, dims(), TrackerConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn max_match_angle_caps_matching() {
        let cfg = TrackerConfig {
            max_match_angle: 0.01,
            ..Default::default()
        };
        let dets = vec![point_det(0, 100., 960.), point_det(1, 1000., 960.)];
        let tracks = run_tracker(&dets, dims(), cfg).unwrap();
        assert_eq!(tracks.len(), 2);
    }

    #[test]
    fn mutual_nearest_is_symmetric() {
        let d = dims();
        let a: Vec<EquirectPoint> = [(100., 100.), (900., 1000.), (3800., 500.)]
            .iter()
            .map(|&(x, y)| EquirectPoint::new(x, y))
            .collect();
        let b: Vec<EquirectPoint> = [(120., 90.), (30., 520.), (2000., 1000.), (880., 990.)]
            .iter()
            .map(|&(x, y)| EquirectPoint::new(x, y))
            .collect();
        let mut ab = mutual_nearest(&a, &b, d, PI);
        let mut ba: Vec<(usize, usize)> = mutual_nearest(&b, &a, d, PI)
            .into_iter()
            .map(|(j, i)| (i, j))
            .collect();
        ab.sort();
        ba.sort();
        assert_eq!(ab, ba);
        assert_eq!(ab, vec![(0, 0), (1, 3), (2, 1)]);
    }

    #[test]
    fn trajectory_rows_sorted() {
        let dets = vec![
            point_det(0, 100., 100.),
            point_det(0, 2000., 100.),
            point_det(1, 2001., 100.),
            point_det(1, 101., 100.),
        ];
        let tracks = run_tracker(&dets, dims(), TrackerConfig::default()).unwrap();
        let rows = trajectory_rows(&tracks);
        let keys: Vec<(usize, u32)> = rows.iter().map(|r| (r.0, r.1)).collect();
        assert_eq!(keys, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(rows[2].2.x, 101.);
    }
}
