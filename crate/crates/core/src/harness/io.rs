//! CSV and JSON readers/writers for the harness file formats.
//!
//! Headers:
//! - detections: `frame,x_min,y_min,x_max,y_max,wrap`
//! - trajectories: `frame,object_id,cx,cy`
//! - viewports: `frame,x,y`
//! - head traces: `timestamp,w,x,y,z`
//! - predictions: `chunk,frame,pred_x,pred_y,actual_x,actual_y,obj_contrib`
//! - allocations: `chunk,row,col,bitrate_mbps`
//! - chunk QoE: `chunk,q1,q2,q3,q4,tile_error`
//! - latency: `chunk,update_ms,predict_ms,allocate_ms`

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

use super::experiment::{ChunkTiming, PredictionRow, RunSummary};
use super::trace::HeadTrace;
use crate::allocator::TileAllocation;
use crate::error::{Error, Result};
use crate::geometry::{EquirectPoint, HeadQuaternion};
use crate::metrics::ChunkQoe;
use crate::predictor::ObjectCoords;
use crate::tracker::Detection;

fn flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("bad wrap flag `{other}`"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectionRow {
    frame: usize,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    #[serde(deserialize_with = "flag")]
    wrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub frame: usize,
    pub object_id: u32,
    pub cx: f64,
    pub cy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewportRow {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationRow {
    pub chunk: usize,
    pub row: usize,
    pub col: usize,
    pub bitrate_mbps: f64,
}

fn read_rows<T: DeserializeOwned, R: Read>(r: R) -> Result<Vec<T>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_rows<T: Serialize, W: Write>(w: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in rows {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| with_path(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| with_path(dir, e))?;
    }
    File::create(path).map_err(|e| with_path(path, e))
}

pub fn read_detections_from<R: Read>(r: R) -> Result<Vec<Detection>> {
    let rows: Vec<DetectionRow> = read_rows(r)?;
    Ok(rows
        .into_iter()
        .map(|r| Detection {
            frame: r.frame,
            x_min: r.x_min,
            y_min: r.y_min,
            x_max: r.x_max,
            y_max: r.y_max,
            wrap: r.wrap,
        })
        .collect())
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    read_detections_from(open(path)?)
}

pub fn write_detections_to<W: Write>(w: W, dets: &[Detection]) -> Result<()> {
    write_rows(
        w,
        dets.iter().map(|d| DetectionRow {
            frame: d.frame,
            x_min: d.x_min,
            y_min: d.y_min,
            x_max: d.x_max,
            y_max: d.y_max,
            wrap: d.wrap,
        }),
    )
}

pub fn write_detections(path: &Path, dets: &[Detection]) -> Result<()> {
    write_detections_to(create(path)?, dets)
}

pub fn read_trajectories_from<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    read_rows(r)
}

pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRow>> {
    read_trajectories_from(open(path)?)
}

pub fn write_trajectories_to<W: Write>(w: W, rows: &[TrajectoryRow]) -> Result<()> {
    write_rows(w, rows)
}

pub fn write_trajectories(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    write_trajectories_to(create(path)?, rows)
}

/// Groups trajectory rows into per-frame object maps. The result covers at
/// least `frames` frames.
pub fn object_frames(rows: &[TrajectoryRow], frames: usize) -> Vec<ObjectCoords> {
    let n = rows.iter().map(|r| r.frame + 1).max().unwrap_or(0).max(frames);
    let mut out = vec![ObjectCoords::new(); n];
    for r in rows {
        out[r.frame].insert(r.object_id, EquirectPoint::new(r.cx, r.cy));
    }
    out
}

/// Inverse of [`object_frames`], sorted by `(frame, object_id)`.
pub fn trajectory_rows_from_frames(objects: &[ObjectCoords]) -> Vec<TrajectoryRow> {
    objects
        .iter()
        .enumerate()
        .flat_map(|(frame, m)| {
            m.iter().map(move |(&object_id, p)| TrajectoryRow {
                frame,
                object_id,
                cx: p.x,
                cy: p.y,
            })
        })
        .collect()
}

/// Viewports ordered by frame; frames must be `0..n` without gaps.
pub fn read_viewports_from<R: Read>(r: R) -> Result<Vec<EquirectPoint>> {
    let mut rows: Vec<ViewportRow> = read_rows(r)?;
    rows.sort_by_key(|r| r.frame);
    for (i, r) in rows.iter().enumerate() {
        if r.frame != i {
            return Err(Error::InvalidInput(format!("viewport frames must be 0..n, found {} at {i}", r.frame)));
        }
    }
    Ok(rows.into_iter().map(|r| EquirectPoint::new(r.x, r.y)).collect())
}

pub fn read_viewports(path: &Path) -> Result<Vec<EquirectPoint>> {
    read_viewports_from(open(path)?)
}

pub fn write_viewports_to<W: Write>(w: W, vps: &[EquirectPoint]) -> Result<()> {
    write_rows(
        w,
        vps.iter().enumerate().map(|(frame, p)| ViewportRow { frame, x: p.x, y: p.y }),
    )
}

pub fn write_viewports(path: &Path, vps: &[EquirectPoint]) -> Result<()> {
    write_viewports_to(create(path)?, vps)
}

pub fn read_head_trace_from<R: Read>(r: R, user: &str, video: &str) -> Result<HeadTrace> {
    let samples: Vec<HeadQuaternion> = read_rows(r)?;
    HeadTrace::new(user, video, samples)
}

/// Reads a `timestamp,w,x,y,z` trace; user and video come from the file stem.
pub fn read_head_trace(path: &Path) -> Result<HeadTrace> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    read_head_trace_from(open(path)?, stem, stem)
}

pub fn write_predictions_to<W: Write>(w: W, rows: &[PredictionRow]) -> Result<()> {
    write_rows(w, rows)
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    write_predictions_to(create(path)?, rows)
}

pub fn read_predictions_from<R: Read>(r: R) -> Result<Vec<PredictionRow>> {
    read_rows(r)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    read_predictions_from(open(path)?)
}

pub fn allocation_rows(chunk: usize, a: &TileAllocation) -> impl Iterator<Item = AllocationRow> + '_ {
    (0..a.rows).flat_map(move |row| {
        (0..a.cols).map(move |col| AllocationRow {
            chunk,
            row,
            col,
            bitrate_mbps: a.bitrates[row * a.cols + col],
        })
    })
}

pub fn write_allocations_to<W: Write>(w: W, allocs: &[TileAllocation]) -> Result<()> {
    write_rows(w, allocs.iter().enumerate().flat_map(|(c, a)| allocation_rows(c, a)))
}

pub fn write_allocations(path: &Path, allocs: &[TileAllocation]) -> Result<()> {
    write_allocations_to(create(path)?, allocs)
}

pub fn write_timings(path: &Path, timings: &[ChunkTiming]) -> Result<()> {
    write_rows(create(path)?, timings)
}

pub fn write_chunk_qoe(path: &Path, chunks: &[ChunkQoe]) -> Result<()> {
    write_rows(create(path)?, chunks)
}

pub fn write_summaries_to<W: Write>(w: W, rows: &[RunSummary]) -> Result<()> {
    write_rows(w, rows)
}

pub fn write_summaries(path: &Path, rows: &[RunSummary]) -> Result<()> {
    write_summaries_to(create(path)?, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}
