//! Command-line front end over the `vp360` harness.
//!
//! Every subcommand writes its outputs plus a `manifest.json` into
//! `--out-dir`. Failures print `{"error": kind, "message": ...}` on stderr
//! and exit nonzero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vp360::allocator::{allocate_naba, allocate_pyramid, TileAllocation};
use vp360::error::{Error, Result};
use vp360::geometry::EquirectPoint;
use vp360::harness::io;
use vp360::harness::{
    compare_variants, generate_synthetic, resample_trace, run_experiment, ExperimentConfig, RunSummary, Scenario,
    SynthSpec, Variant,
};
use vp360::metrics::QoeReport;
use vp360::predictor::ObjectCoords;
use vp360::timeseries::ArimaOrder;
use vp360::tracker::{run_tracker, TrackerConfig};

/// Version of every JSON document and CSV layout written by this tool.
const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "vp360", version, about = "Viewport prediction and tile allocation for 360-degree video")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detections CSV -> object trajectories CSV.
    Track(TrackArgs),
    /// Trajectories + head trace -> per-frame predictions.
    Predict(RunArgs),
    /// Predictions CSV -> per-chunk tile bitrates.
    Allocate(AllocateArgs),
    /// Full streaming run -> QoE report.
    Evaluate(RunArgs),
    /// All variants on the same input -> comparison table.
    Compare(CompareArgs),
    /// Synthetic viewer and objects.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Base configuration as JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    player_width: Option<f64>,
    #[arg(long)]
    player_height: Option<f64>,
    /// Total bitrate per chunk, Mbps.
    #[arg(long)]
    bitrate_mbps: Option<f64>,
    #[arg(long)]
    fps: Option<usize>,
    #[arg(long)]
    chunk_seconds: Option<f64>,
    #[arg(long)]
    warmup_seconds: Option<f64>,
    /// ARIMA order for x as `p,d,q`.
    #[arg(long, value_parser = parse_order)]
    order_x: Option<ArimaOrder>,
    /// ARIMA order for y as `p,d,q`.
    #[arg(long, value_parser = parse_order)]
    order_y: Option<ArimaOrder>,
    #[arg(long)]
    pa_c: Option<f64>,
    #[arg(long)]
    pa_epsilon: Option<f64>,
    #[arg(long)]
    pa_alpha: Option<f64>,
    /// Scale PA features to unit range.
    #[arg(long)]
    normalize_features: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Per-frame viewports CSV (`frame,x,y`).
    #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
    viewports: Option<PathBuf>,
    /// Head trace CSV (`timestamp,w,x,y,z`), resampled at `--fps`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Object trajectories CSV (`frame,object_id,cx,cy`).
    #[arg(long)]
    trajectories: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated variants; all of them by default.
    #[arg(long, value_delimiter = ',')]
    variants: Vec<Variant>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct TrackArgs {
    /// Detections CSV (`frame,x_min,y_min,x_max,y_max,wrap`).
    #[arg(long)]
    detections: PathBuf,
    /// Missed frames before a track is retired.
    #[arg(long, default_value_t = 30)]
    deactivate_after: usize,
    /// Largest central angle accepted as a match, radians.
    #[arg(long, default_value_t = std::f64::consts::PI)]
    max_match_angle: f64,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct AllocateArgs {
    /// Predictions CSV as written by `predict`.
    #[arg(long)]
    predictions: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "object_follower")]
    scenario: Scenario,
    #[arg(long, default_value_t = 60.0)]
    duration_seconds: f64,
    #[arg(long)]
    noise_px: Option<f64>,
    #[arg(long)]
    noise_tau: Option<f64>,
    #[arg(long)]
    distractors: Option<usize>,
    #[arg(long)]
    speed: Option<f64>,
    #[arg(long)]
    distractor_speed: Option<f64>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

fn parse_order(s: &str) -> std::result::Result<ArimaOrder, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad order `{s}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [p, d, q] => Ok(ArimaOrder { p, d, q }),
        _ => Err(format!("order must be p,d,q, got `{s}`")),
    }
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut c: ExperimentConfig = match &self.config {
            Some(p) => io::read_json(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(width, height, rows, cols, player_width, player_height, bitrate_mbps, fps);
        set!(chunk_seconds, warmup_seconds, order_x, order_y, seed, variant);
        if let Some(v) = self.pa_c {
            c.pa.c = v;
        }
        if let Some(v) = self.pa_epsilon {
            c.pa.epsilon = v;
        }
        if let Some(v) = self.pa_alpha {
            c.pa.alpha = v;
        }
        c.normalize_features |= self.normalize_features;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    files: Vec<&'a str>,
}

fn finish(out: &Path, command: &str, files: &[&str]) -> Result<()> {
    io::write_json(
        &out.join("manifest.json"),
        &Manifest {
            schema_version: SCHEMA_VERSION,
            command,
            files: files.to_vec(),
        },
    )
}

fn load_inputs(input: &InputArgs, cfg: &ExperimentConfig) -> Result<(Vec<EquirectPoint>, Vec<ObjectCoords>)> {
    let viewports = match (&input.viewports, &input.trace) {
        (Some(p), _) => io::read_viewports(p)?,
        (None, Some(p)) => resample_trace(&io::read_head_trace(p)?, cfg.fps, cfg.dims()?, None)?,
        (None, None) => return Err(Error::InvalidInput("need --viewports or --trace".into())),
    };
    let objects = match &input.trajectories {
        Some(p) => io::object_frames(&io::read_trajectories(p)?, viewports.len()),
        None => vec![ObjectCoords::new(); viewports.len()],
    };
    Ok((viewports, objects))
}

#[derive(Serialize)]
struct EvaluateDoc<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    summary: RunSummary,
    qoe: &'a QoeReport,
}

#[derive(Serialize)]
struct CompareDoc<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    rows: &'a [RunSummary],
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let cfg = a.cfg.build()?;
            let mut spec = SynthSpec::new(a.scenario, cfg.seed);
            spec.dims = cfg.dims()?;
            spec.fps = cfg.fps;
            spec.duration_seconds = a.duration_seconds;
            spec.noise_px = a.noise_px.unwrap_or(spec.noise_px);
            spec.noise_tau = a.noise_tau.unwrap_or(spec.noise_tau);
            spec.distractors = a.distractors.unwrap_or(spec.distractors);
            spec.speed = a.speed.unwrap_or(spec.speed);
            spec.distractor_speed = a.distractor_speed.unwrap_or(spec.distractor_speed);
            let data = generate_synthetic(&spec)?;
            let out = &a.cfg.out_dir;
            io::write_viewports(&out.join("viewports.csv"), &data.viewports)?;
            io::write_trajectories(&out.join("trajectories.csv"), &io::trajectory_rows_from_frames(&data.objects))?;
            finish(out, "synth", &["viewports.csv", "trajectories.csv"])
        }
        Command::Track(a) => {
            let cfg = a.cfg.build()?;
            let tcfg = TrackerConfig {
                deactivate_after: a.deactivate_after,
                max_match_angle: a.max_match_angle,
            };
            let tracks = run_tracker(&io::read_detections(&a.detections)?, cfg.dims()?, tcfg)?;
            let rows: Vec<io::TrajectoryRow> = vp360::tracker::trajectory_rows(&tracks)
                .into_iter()
                .map(|(frame, object_id, p)| io::TrajectoryRow {
                    frame,
                    object_id,
                    cx: p.x,
                    cy: p.y,
                })
                .collect();
            let out = &a.cfg.out_dir;
            io::write_trajectories(&out.join("trajectories.csv"), &rows)?;
            finish(out, "track", &["trajectories.csv"])
        }
        Command::Predict(a) => {
            let cfg = a.cfg.build()?;
            if cfg.variant == Variant::Naba {
                return Err(Error::InvalidConfig("naba does not predict; use evaluate".into()));
            }
            let (vps, objs) = load_inputs(&a.input, &cfg)?;
            let report = run_experiment(&cfg, &vps, &objs)?;
            let out = &a.cfg.out_dir;
            io::write_predictions(&out.join("predictions.csv"), &report.predictions)?;
            io::write_timings(&out.join("latency.csv"), &report.timings)?;
            finish(out, "predict", &["predictions.csv", "latency.csv"])
        }
        Command::Allocate(a) => {
            let cfg = a.cfg.build()?;
            let grid = cfg.grid()?;
            let rows = read_prediction_points(&a.predictions)?;
            let mut allocs: Vec<TileAllocation> = Vec::new();
            for (chunk, points) in rows.iter().enumerate() {
                if points.is_empty() {
                    return Err(Error::InvalidInput(format!("chunk {chunk} has no predictions")));
                }
                allocs.push(match cfg.variant {
                    Variant::Naba => allocate_naba(&grid, cfg.bitrate_mbps)?,
                    _ => allocate_pyramid(points, &grid, &cfg.fov(), cfg.bitrate_mbps)?,
                });
            }
            let out = &a.cfg.out_dir;
            io::write_allocations(&out.join("allocations.csv"), &allocs)?;
            finish(out, "allocate", &["allocations.csv"])
        }
        Command::Evaluate(a) => {
            let cfg = a.cfg.build()?;
            let (vps, objs) = load_inputs(&a.input, &cfg)?;
            let report = run_experiment(&cfg, &vps, &objs)?;
            let out = &a.cfg.out_dir;
            io::write_json(
                &out.join("report.json"),
                &EvaluateDoc {
                    schema_version: SCHEMA_VERSION,
                    config: &cfg,
                    summary: report.summary(),
                    qoe: &report.qoe,
                },
            )?;
            io::write_chunk_qoe(&out.join("qoe_chunks.csv"), &report.qoe.chunks)?;
            io::write_allocations(&out.join("allocations.csv"), &report.allocations)?;
            io::write_timings(&out.join("latency.csv"), &report.timings)?;
            finish(out, "evaluate", &["report.json", "qoe_chunks.csv", "allocations.csv", "latency.csv"])
        }
        Command::Compare(a) => {
            let cfg = a.cfg.build()?;
            let variants = if a.variants.is_empty() { Variant::ALL.to_vec() } else { a.variants };
            let (vps, objs) = load_inputs(&a.input, &cfg)?;
            let rows = compare_variants(&cfg, &variants, &vps, &objs)?;
            let out = &a.cfg.out_dir;
            io::write_summaries(&out.join("comparison.csv"), &rows)?;
            io::write_json(
                &out.join("comparison.json"),
                &CompareDoc {
                    schema_version: SCHEMA_VERSION,
                    config: &cfg,
                    rows: &rows,
                },
            )?;
            finish(out, "compare", &["comparison.csv", "comparison.json"])
        }
    }
}

/// Predicted points grouped by chunk; chunks must be numbered `0..n`.
fn read_prediction_points(path: &Path) -> Result<Vec<Vec<EquirectPoint>>> {
    let rows = io::read_predictions(path)?;
    let n = rows.iter().map(|r| r.chunk + 1).max().unwrap_or(0);
    if n == 0 {
        return Err(Error::InvalidInput("no predictions".into()));
    }
    let mut out = vec![Vec::new(); n];
    for r in rows {
        out[r.chunk].push(EquirectPoint::new(r.pred_x, r.pred_y));
    }
    Ok(out)
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}
