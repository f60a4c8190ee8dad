use serde::{Deserialize, Serialize};

use crate::allocator::{PlayerFov, TileGrid};
use crate::error::{Error, Result};
use crate::geometry::FrameDims;
use crate::predictor::{PaHyper, PredictorMode, SessionConfig};
use crate::timeseries::ArimaOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Parima,
    ArimaOnly,
    PaOnly,
    Naba,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Parima, Variant::ArimaOnly, Variant::PaOnly, Variant::Naba];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Parima => "parima",
            Variant::ArimaOnly => "arima_only",
            Variant::PaOnly => "pa_only",
            Variant::Naba => "naba",
        }
    }

    /// Predictor used for this variant; `None` for the non-adaptive baseline.
    pub fn predictor_mode(self) -> Option<PredictorMode> {
        match self {
            Variant::Parima => Some(PredictorMode::Parima),
            Variant::ArimaOnly => Some(PredictorMode::ArimaOnly),
            Variant::PaOnly => Some(PredictorMode::PaOnly),
            Variant::Naba => None,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{s}`")))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub width: u32,
    pub height: u32,
    pub rows: usize,
    pub cols: usize,
    pub player_width: f64,
    pub player_height: f64,
    /// Preferred total bitrate, Mbps.
    pub bitrate_mbps: f64,
    pub fps: usize,
    pub chunk_seconds: f64,
    pub warmup_seconds: f64,
    pub order_x: ArimaOrder,
    pub order_y: ArimaOrder,
    pub pa: PaHyper,
    pub normalize_features: bool,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            width: 3840,
            height: 1920,
            rows: 8,
            cols: 8,
            player_width: 600.0,
            player_height: 300.0,
            bitrate_mbps: 8.0,
            fps: 30,
            chunk_seconds: 1.0,
            warmup_seconds: 5.0,
            order_x: ArimaOrder { p: 2, d: 1, q: 1 },
            order_y: ArimaOrder { p: 3, d: 1, q: 0 },
            pa: PaHyper::default(),
            normalize_features: false,
            seed: 0,
            variant: Variant::Parima,
        }
    }
}

impl ExperimentConfig {
    pub fn dims(&self) -> Result<FrameDims> {
        FrameDims::new(self.width, self.height)
    }

    pub fn grid(&self) -> Result<TileGrid> {
        TileGrid::new(self.rows, self.cols, self.dims()?)
    }

    pub fn fov(&self) -> PlayerFov {
        PlayerFov {
            width: self.player_width,
            height: self.player_height,
        }
    }

    pub fn chunk_size(&self) -> usize {
        (self.fps as f64 * self.chunk_seconds).round() as usize
    }

    pub fn warmup_frames(&self) -> usize {
        (self.fps as f64 * self.warmup_seconds).round() as usize
    }

    pub fn session_config(&self, mode: PredictorMode) -> Result<SessionConfig> {
        let cfg = SessionConfig {
            dims: self.dims()?,
            fps: self.fps,
            chunk_size: self.chunk_size(),
            warmup_frames: self.warmup_frames(),
            order_x: self.order_x,
            order_y: self.order_y,
            pa: self.pa,
            normalize_features: self.normalize_features,
            seed: self.seed,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.fps == 0 {
            return Err(Error::InvalidConfig("fps must be >= 1".into()));
        }
        if !(self.player_width > 0.0 && self.player_height > 0.0) {
            return Err(Error::InvalidConfig("player size must be positive".into()));
        }
        if self.player_width >= self.width as f64 || self.player_height >= self.height as f64 {
            return Err(Error::InvalidConfig("player must be smaller than the frame".into()));
        }
        if !(self.bitrate_mbps >= 0.0) {
            return Err(Error::InvalidConfig("bitrate must be >= 0".into()));
        }
        self.session_config(PredictorMode::Parima).map(|_| ())
    }
}
