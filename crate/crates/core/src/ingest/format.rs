//! Reading and writing the per-frame keypoint files and the consolidated table.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_skeleton, Keypoint2D, Skeleton, NUM_KEYPOINTS};

/// Values per person: 25 slots of (x, y, confidence).
pub const TRIPLE_VALUES: usize = NUM_KEYPOINTS * 3;

/// One person entry of a frame file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePerson {
    pub pose_keypoints_2d: Vec<f64>,
}

/// The on-disk layout of a single frame: a top-level object with a `people` list.
///
/// Unknown fields (version, face/hand arrays, person ids) are ignored on read.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameFile {
    pub people: Vec<FramePerson>,
}

impl FrameFile {
    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::MalformedFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame file serialisation cannot fail")
    }
}

/// All detections of one frame, identity unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    pub frame: u64,
    pub timestamp_ms: f64,
    pub detections: Vec<Skeleton>,
}

pub fn frame_timestamp_ms(frame: u64, fps: f64) -> f64 {
    frame as f64 * 1000.0 / fps
}

fn check_fps(fps: f64) -> Result<()> {
    if fps.is_finite() && fps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("fps must be positive, got {fps}")))
    }
}

fn skeleton_from_triples(values: &[f64], frame: u64, ts: f64, min_conf: f64) -> Result<Skeleton> {
    let raw: Vec<Option<Keypoint2D>> = values
        .chunks_exact(3)
        .map(|t| Some(Keypoint2D::new(t[0], t[1], t[2])))
        .collect();
    validate_skeleton(&raw, frame, ts, min_conf)
}

/// Parses one per-frame keypoint file into skeletons.
pub fn parse_frame_file(bytes: &[u8], frame: u64, fps: f64, min_confidence: f64) -> Result<FrameObservation> {
    check_fps(fps)?;
    let file = FrameFile::from_slice(bytes)?;
    let timestamp_ms = frame_timestamp_ms(frame, fps);
    let detections = file
        .people
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.pose_keypoints_2d.len() != TRIPLE_VALUES {
                return Err(Error::BadTripleCount {
                    person: i,
                    len: p.pose_keypoints_2d.len(),
                });
            }
            skeleton_from_triples(&p.pose_keypoints_2d, frame, timestamp_ms, min_confidence)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameObservation {
        frame,
        timestamp_ms,
        detections,
    })
}

#[derive(Debug, Deserialize)]
struct TableRow {
    frame: u64,
    person_index: usize,
    slot: usize,
    x: f64,
    y: f64,
    confidence: f64,
}

/// Parses the consolidated table (`frame,person_index,slot,x,y,confidence`).
///
/// Slots without a row are missing. Frames without rows are absent from the output.
pub fn parse_table_file(bytes: &[u8], fps: f64, min_confidence: f64) -> Result<Vec<FrameObservation>> {
    check_fps(fps)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedFile(e.to_string()))?
        .clone();
    for col in ["frame", "person_index", "slot", "x", "y", "confidence"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::MalformedFile(format!("table header is missing column `{col}`")));
        }
    }
    let mut frames: BTreeMap<u64, BTreeMap<usize, Vec<Option<Keypoint2D>>>> = BTreeMap::new();
    for (line, row) in reader.deserialize::<TableRow>().enumerate() {
        let row = row.map_err(|e| Error::MalformedFile(format!("row {}: {e}", line + 2)))?;
        if row.slot >= NUM_KEYPOINTS {
            return Err(Error::MalformedFile(format!(
                "row {}: slot {} out of range",
                line + 2,
                row.slot
            )));
        }
        let person = frames
            .entry(row.frame)
            .or_default()
            .entry(row.person_index)
            .or_insert_with(|| vec![None; NUM_KEYPOINTS]);
        person[row.slot] = Some(Keypoint2D::new(row.x, row.y, row.confidence));
    }
    frames
        .into_iter()
        .map(|(frame, people)| {
            let timestamp_ms = frame_timestamp_ms(frame, fps);
            let detections = people
                .into_values()
                .map(|raw| validate_skeleton(&raw, frame, timestamp_ms, min_confidence))
                .collect::<Result<Vec<_>>>()?;
            Ok(FrameObservation {
                frame,
                timestamp_ms,
                detections,
            })
        })
        .collect()
}

/// Extracts the frame number from a file name: the last run of digits in its stem.
///
/// `session_000000000042_keypoints.json` gives 42.
pub fn frame_number_from_name(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let bytes = stem.as_bytes();
    let end = bytes.iter().rposition(|b| b.is_ascii_digit())? + 1;
    let start = bytes[..end]
        .iter()
        .rposition(|b| !b.is_ascii_digit())
        .map_or(0, |i| i + 1);
    stem[start..end].parse().ok()
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Lists frame files in a directory ordered by their embedded frame number.
pub fn list_frame_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() || !has_extension(&path, "json") {
            continue;
        }
        if let Some(n) = frame_number_from_name(&path) {
            files.push((n, path));
        }
    }
    files.sort();
    if let Some(w) = files.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::in_file(
            &w[1].1,
            Error::MalformedFile(format!("duplicate frame number {}", w[0].0)),
        ));
    }
    Ok(files)
}

/// Loads every frame under `input`.
///
/// `input` may be a directory of per-frame files, a directory holding a single
/// `.csv` table, or a table file itself. Files are parsed in parallel and
/// returned in frame order.
pub fn load_frames(input: &Path, fps: f64, min_confidence: f64) -> Result<Vec<FrameObservation>> {
    check_fps(fps)?;
    if input.is_file() {
        let bytes = fs::read(input).map_err(|e| Error::in_file(input, e.into()))?;
        let frames = parse_table_file(&bytes, fps, min_confidence).map_err(|e| Error::in_file(input, e))?;
        if frames.is_empty() {
            return Err(Error::NoInput(input.to_path_buf()));
        }
        return Ok(frames);
    }
    if !input.is_dir() {
        return Err(Error::NoInput(input.to_path_buf()));
    }
    let files = list_frame_files(input)?;
    if files.is_empty() {
        let tables: Vec<PathBuf> = fs::read_dir(input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && has_extension(p, "csv"))
            .collect();
        if let [table] = tables.as_slice() {
            return load_frames(table, fps, min_confidence);
        }
        return Err(Error::NoInput(input.to_path_buf()));
    }
    files
        .par_iter()
        .map(|(frame, path)| {
            let bytes = fs::read(path).map_err(|e| Error::in_file(path, e.into()))?;
            parse_frame_file(&bytes, *frame, fps, min_confidence).map_err(|e| Error::in_file(path, e))
        })
        .collect()
}

/// Conventional file name for frame `frame`.
pub fn frame_file_name(prefix: &str, frame: u64) -> String {
    format!("{prefix}_{frame:012}_keypoints.json")
}
