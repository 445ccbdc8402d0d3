//! End-to-end analysis: frames -> tracks -> angle series -> episodes -> report.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{detect_episodes, exchange_candidates, sd_outliers, DetectorConfig};
use crate::error::{Error, Result};
use crate::ingest::{build_tracks, FrameObservation, TrackerConfig, DEFAULT_GRACE_FRAMES, DEFAULT_MAX_DISPLACEMENT_PX};
use crate::model::{KeypointLayout, PersonTrack, Rule, Side, SuspicionEpisode, TrackId, DEFAULT_MIN_CONFIDENCE};
use crate::series::{
    extract_angle_series, interpolate_gaps, person_stats, smooth_angles, AngleSeries, PersonStats,
    DEFAULT_MAX_GAP_FRAMES, DEFAULT_SMOOTH_WINDOW,
};

/// Every knob of the pipeline. Echoed verbatim into the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub fps: f64,
    pub layout: KeypointLayout,
    pub min_confidence: f64,
    pub max_displacement_px: f64,
    pub grace_frames: u64,
    pub max_gap_frames: u64,
    pub smooth_window: usize,
    pub detector: DetectorConfig,
}

impl AnalysisConfig {
    pub fn new(fps: f64) -> Self {
        Self {
            fps,
            layout: KeypointLayout::Paper,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
            max_displacement_px: DEFAULT_MAX_DISPLACEMENT_PX,
            grace_frames: DEFAULT_GRACE_FRAMES,
            max_gap_frames: DEFAULT_MAX_GAP_FRAMES,
            smooth_window: DEFAULT_SMOOTH_WINDOW,
            detector: DetectorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidConfig(format!("fps must be positive, got {}", self.fps)));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::InvalidConfig(format!(
                "min_confidence must be in [0, 1], got {}",
                self.min_confidence
            )));
        }
        if self.max_displacement_px.is_nan() || self.max_displacement_px <= 0.0 {
            return Err(Error::InvalidConfig("max_displacement_px must be positive".into()));
        }
        if self.smooth_window == 0 || self.smooth_window.is_multiple_of(2) {
            return Err(Error::BadWindow(self.smooth_window));
        }
        self.detector.validate()
    }

    fn tracker(&self) -> TrackerConfig {
        TrackerConfig {
            max_displacement_px: self.max_displacement_px,
            grace_frames: self.grace_frames,
            layout: self.layout,
        }
    }
}

/// A gap-filled track with its smoothed angle series, left then right.
#[derive(Debug, Clone)]
pub struct ProcessedTrack {
    pub track: PersonTrack,
    pub series: [AngleSeries; 2],
}

impl ProcessedTrack {
    pub fn side(&self, side: Side) -> &AngleSeries {
        match side {
            Side::Left => &self.series[0],
            Side::Right => &self.series[1],
        }
    }
}

/// Tracks, gap-fills, extracts and smooths. Output ordered by track id.
pub fn process_tracks(frames: Vec<FrameObservation>, cfg: &AnalysisConfig) -> Result<Vec<ProcessedTrack>> {
    cfg.validate()?;
    let tracks = build_tracks(frames, cfg.tracker());
    tracks
        .into_par_iter()
        .map(|t| {
            let track = interpolate_gaps(&t, cfg.max_gap_frames);
            let series = Side::BOTH.map(|side| {
                let raw = extract_angle_series(&track, side, cfg.fps, cfg.layout);
                smooth_angles(&raw, cfg.smooth_window)
            });
            let [left, right] = series;
            Ok(ProcessedTrack {
                track,
                series: [left?, right?],
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub fps: f64,
    pub frame_count: usize,
    pub first_frame: Option<u64>,
    pub last_frame: Option<u64>,
    pub track_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSummary {
    pub track_id: TrackId,
    pub frames: usize,
    pub first_frame: u64,
    pub last_frame: u64,
    pub left: PersonStats,
    pub right: PersonStats,
    /// Extended-arm and exchange-candidate episodes involving this track.
    pub episode_count: usize,
    pub sd_outlier_count: usize,
}

/// The analysis result. `episodes` holds extended-arm and exchange-candidate
/// episodes; per-person SD outliers are kept apart in `sd_outliers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub session: SessionInfo,
    pub config: AnalysisConfig,
    pub tracks: Vec<TrackSummary>,
    pub episodes: Vec<SuspicionEpisode>,
    pub sd_outliers: Vec<SuspicionEpisode>,
}

fn episode_order(a: &SuspicionEpisode, b: &SuspicionEpisode) -> std::cmp::Ordering {
    (a.track_id, a.start_frame, a.side, a.rule, a.end_frame).cmp(&(
        b.track_id,
        b.start_frame,
        b.side,
        b.rule,
        b.end_frame,
    ))
}

/// Detection over already processed tracks.
pub fn detect_all(
    processed: &[ProcessedTrack],
    cfg: &AnalysisConfig,
) -> (Vec<SuspicionEpisode>, Vec<SuspicionEpisode>) {
    let per_series: Vec<(Vec<SuspicionEpisode>, Vec<SuspicionEpisode>)> = processed
        .par_iter()
        .flat_map_iter(|p| p.series.iter())
        .map(|s| (detect_episodes(s, &cfg.detector), sd_outliers(s, &cfg.detector)))
        .collect();
    let mut extended = Vec::new();
    let mut outliers = Vec::new();
    for (e, o) in per_series {
        extended.extend(e);
        outliers.extend(o);
    }
    extended.sort_by(episode_order);
    let tracks: Vec<PersonTrack> = processed.iter().map(|p| p.track.clone()).collect();
    let pairs = exchange_candidates(&extended, &tracks, cfg.fps, cfg.layout, &cfg.detector);
    let mut episodes = extended;
    episodes.extend(pairs);
    episodes.sort_by(episode_order);
    outliers.sort_by(episode_order);
    (episodes, outliers)
}

pub fn analyze(frames: Vec<FrameObservation>, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    let frame_count = frames.len();
    let first_frame = frames.first().map(|f| f.frame);
    let last_frame = frames.last().map(|f| f.frame);
    let processed = process_tracks(frames, cfg)?;
    let (episodes, sd_outliers) = detect_all(&processed, cfg);

    let involves = |e: &SuspicionEpisode, id: TrackId| e.track_id == id || e.partner.is_some_and(|p| p.track_id == id);
    let tracks = processed
        .iter()
        .map(|p| {
            let id = p.track.track_id;
            TrackSummary {
                track_id: id,
                frames: p.track.skeletons.len(),
                first_frame: p.track.first_frame().unwrap_or_default(),
                last_frame: p.track.last_frame().unwrap_or_default(),
                left: person_stats(p.side(Side::Left)),
                right: person_stats(p.side(Side::Right)),
                episode_count: episodes.iter().filter(|e| involves(e, id)).count(),
                sd_outlier_count: sd_outliers.iter().filter(|e| e.track_id == id).count(),
            }
        })
        .collect();

    Ok(AnalysisReport {
        session: SessionInfo {
            fps: cfg.fps,
            frame_count,
            first_frame,
            last_frame,
            track_count: processed.len(),
        },
        config: *cfg,
        tracks,
        episodes,
        sd_outliers,
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialisation cannot fail");
        s.push('\n');
        s
    }

    pub fn episodes_with_rule(&self, rule: Rule) -> impl Iterator<Item = &SuspicionEpisode> {
        self.episodes
            .iter()
            .chain(&self.sd_outliers)
            .filter(move |e| e.rule == rule)
    }

    /// Flat table of every episode, including SD outliers.
    pub fn write_episode_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record([
            "rule",
            "track_id",
            "side",
            "start_frame",
            "end_frame",
            "start_ms",
            "end_ms",
            "peak_elbow_angle_deg",
            "mean_elbow_angle_deg",
            "partner_track_id",
            "partner_side",
            "min_wrist_distance_px",
        ])
        .map_err(io)?;
        let mut all: Vec<&SuspicionEpisode> = self.episodes.iter().chain(&self.sd_outliers).collect();
        all.sort_by(|a, b| episode_order(a, b));
        for e in all {
            w.write_record([
                e.rule.to_string(),
                e.track_id.to_string(),
                e.side.to_string(),
                e.start_frame.to_string(),
                e.end_frame.to_string(),
                e.start_ms.to_string(),
                e.end_ms.to_string(),
                e.peak_elbow_angle_deg.to_string(),
                e.mean_elbow_angle_deg.to_string(),
                e.partner.map(|p| p.track_id.to_string()).unwrap_or_default(),
                e.partner.map(|p| p.side.to_string()).unwrap_or_default(),
                e.partner
                    .map(|p| p.min_wrist_distance_px.to_string())
                    .unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scatter rows for external plotting: one row per sample with an elbow angle.
///
/// `tracks` empty means all tracks; `side` `None` means both sides.
pub fn write_scatter_table<W: Write>(
    out: W,
    processed: &[ProcessedTrack],
    threshold_deg: f64,
    tracks: &[TrackId],
    side: Option<Side>,
) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record([
        "track_id",
        "side",
        "frame",
        "timestamp_ms",
        "elbow_angle_deg",
        "shoulder_neck_angle_deg",
        "above_t",
    ])
    .map_err(io)?;
    let mut rows = 0;
    let wanted = processed
        .iter()
        .filter(|p| tracks.is_empty() || tracks.contains(&p.track.track_id))
        .flat_map(|p| p.series.iter())
        .filter(|s| side.is_none_or(|side| s.side == side));
    for s in wanted {
        for sample in &s.samples {
            let Some(elbow) = sample.elbow_angle_deg else { continue };
            w.write_record([
                s.track_id.to_string(),
                s.side.to_string(),
                sample.frame.to_string(),
                sample.timestamp_ms.to_string(),
                elbow.to_string(),
                sample
                    .shoulder_neck_angle_deg
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                (elbow >= threshold_deg).to_string(),
            ])
            .map_err(io)?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}
