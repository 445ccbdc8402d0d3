#![allow(dead_code)]

use std::path::{Path, PathBuf};

use exam_pose_core::ingest::{anchor_point, load_frames};
use exam_pose_core::model::{KeypointLayout, TrackId};
use exam_pose_core::pipeline::{process_tracks, AnalysisConfig, ProcessedTrack};
use exam_pose_core::synth::Seat;

pub fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn interval_iou(a: (u64, u64), b: (u64, u64)) -> f64 {
    let inter = (a.1.min(b.1) as i64 - a.0.max(b.0) as i64 + 1).max(0) as f64;
    let union = (a.1 - a.0 + 1) as f64 + (b.1 - b.0 + 1) as f64 - inter;
    inter / union
}

pub fn processed(dir: &Path, fps: f64) -> Vec<ProcessedTrack> {
    let cfg = AnalysisConfig::new(fps);
    process_tracks(load_frames(dir, fps, cfg.min_confidence).unwrap(), &cfg).unwrap()
}

/// Track whose first anchor lies closest to the seat.
pub fn track_at_seat(processed: &[ProcessedTrack], seat: &Seat) -> TrackId {
    processed
        .iter()
        .min_by(|a, b| {
            let d = |p: &ProcessedTrack| {
                let a = anchor_point(&p.track.skeletons[0], KeypointLayout::Paper).unwrap();
                (a.x - seat.x).hypot(a.y - seat.y)
            };
            d(a).total_cmp(&d(b))
        })
        .unwrap()
        .track
        .track_id
}
