//! Experiment driver: configuration, trace ingestion, synthetic viewers,
//! the streaming loop and file I/O.

pub mod config;
pub mod experiment;
pub mod io;
pub mod synth;
pub mod trace;

pub use config::{ExperimentConfig, Variant};
pub use experiment::{compare_variants, run_experiment, ChunkTiming, PredictionRow, RunReport, RunSummary};
pub use synth::{generate_synthetic, Scenario, SynthSpec, SyntheticData};
pub use trace::{resample_trace, HeadTrace};
