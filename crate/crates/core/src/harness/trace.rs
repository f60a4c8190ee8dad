//! Head-orientation traces and their per-frame resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quaternion_to_viewport, EquirectPoint, FrameDims, HeadQuaternion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadTrace {
    pub user: String,
    pub video: String,
    /// Non-decreasing timestamps, seconds.
    pub samples: Vec<HeadQuaternion>,
}

impl HeadTrace {
    pub fn new(user: impl Into<String>, video: impl Into<String>, samples: Vec<HeadQuaternion>) -> Result<Self> {
        if let Some(w) = samples.windows(2).find(|w| w[1].timestamp < w[0].timestamp) {
            return Err(Error::InvalidInput(format!(
                "trace timestamps decrease: {} after {}",
                w[1].timestamp, w[0].timestamp
            )));
        }
        Ok(Self {
            user: user.into(),
            video: video.into(),
            samples,
        })
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => 0.0,
        }
    }
}

/// One viewport per frame at `t_f = t_0 + f / fps`, taken from the sample
/// with the nearest timestamp (earlier sample on ties). Covers the whole
/// trace unless `frames` is given.
pub fn resample_trace(trace: &HeadTrace, fps: usize, dims: FrameDims, frames: Option<usize>) -> Result<Vec<EquirectPoint>> {
    let s = &trace.samples;
    if s.is_empty() {
        return Err(Error::InvalidInput("empty head trace".into()));
    }
    if fps == 0 {
        return Err(Error::InvalidConfig("fps must be >= 1".into()));
    }
    for w in s.windows(2) {
        if w[1].timestamp - w[0].timestamp > 1.0 {
            log::warn!(
                "trace {}/{} has a {:.2}s gap at t={}",
                trace.user,
                trace.video,
                w[1].timestamp - w[0].timestamp,
                w[0].timestamp
            );
        }
    }
    let t0 = s[0].timestamp;
    let n = frames.unwrap_or_else(|| (trace.duration() * fps as f64 + 1e-9).floor() as usize + 1);
    let mut out = Vec::with_capacity(n);
    for f in 0..n {
        let t = t0 + f as f64 / fps as f64;
        let after = s.partition_point(|q| q.timestamp < t);
        let idx = if after == 0 {
            0
        } else if after == s.len() {
            s.len() - 1
        } else if t - s[after - 1].timestamp <= s[after].timestamp - t {
            after - 1
        } else {
            after
        };
        out.push(quaternion_to_viewport(s[idx], dims)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn dims() -> FrameDims {
        FrameDims::new(3840, 1920).unwrap()
    }

    fn yaw(angle: f64, t: f64) -> HeadQuaternion {
        let h = angle / 2.0;
        HeadQuaternion::new(h.cos(), 0.0, 0.0, h.sin(), t)
    }

    #[test]
    fn exact_frame_times_are_selected() {
        let samples: Vec<_> = (0..10).map(|i| yaw(0.01 * i as f64, i as f64 / 10.0)).collect();
        let trace = HeadTrace::new("u", "v", samples.clone()).unwrap();
        let vps = resample_trace(&trace, 10, dims(), None).unwrap();
        assert_eq!(vps.len(), 10);
        for (vp, q) in vps.iter().zip(&samples) {
            assert_eq!(*vp, quaternion_to_viewport(*q, dims()).unwrap());
        }
    }

    #[test]
    fn nearest_sample_and_tie_goes_earlier() {
        let a = yaw(0.0, 0.0);
        let b = yaw(FRAC_PI_4, 0.1);
        let trace = HeadTrace::new("u", "v", vec![a, b]).unwrap();
        // 20 fps: t = 0, 0.05 (tie), 0.1
        let vps = resample_trace(&trace, 20, dims(), Some(3)).unwrap();
        let va = quaternion_to_viewport(a, dims()).unwrap();
        let vb = quaternion_to_viewport(b, dims()).unwrap();
        assert_eq!(vps, vec![va, va, vb]);
        // 30 fps: t = 0.0667 is nearer b
        let vps = resample_trace(&trace, 30, dims(), Some(3)).unwrap();
        assert_eq!(vps[2], vb);
    }

    #[test]
    fn constant_trace_constant_viewport() {
        let samples: Vec<_> = (0..50).map(|i| yaw(1.0, i as f64 * 0.02)).collect();
        let trace = HeadTrace::new("u", "v", samples).unwrap();
        let vps = resample_trace(&trace, 30, dims(), None).unwrap();
        assert!(vps.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn errors() {
        let trace = HeadTrace::new("u", "v", vec![]).unwrap();
        assert!(matches!(resample_trace(&trace, 30, dims(), None), Err(Error::InvalidInput(_))));
        assert!(HeadTrace::new("u", "v", vec![yaw(0., 1.0), yaw(0., 0.5)]).is_err());
    }
}
