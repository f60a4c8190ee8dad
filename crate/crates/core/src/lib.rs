//! Viewport prediction and tile bitrate allocation for 360° video streaming.

// `!(x >= 0.0)` style checks are used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod timeseries;
pub mod tracker;
pub mod allocator;
pub mod metrics;
pub mod predictor;
pub mod harness;
