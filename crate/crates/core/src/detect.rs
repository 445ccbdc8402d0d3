//! Extended-arm rule, duration-gated episodes, SD outliers and pairwise
//! exchange candidates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KeypointLayout, Landmark, Partner, PersonTrack, Rule, SuspicionEpisode, TrackId};
use crate::series::{person_stats, AngleSeries};

/// Fewer present samples than this and a series gets no SD flags.
pub const SD_MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Elbow-angle threshold T in degrees.
    pub threshold_deg: f64,
    /// Minimum shoulder-neck angle in degrees. 0 disables the condition.
    pub shoulder_min_deg: f64,
    pub min_duration_ms: f64,
    pub merge_gap_frames: u64,
    pub sd_k: f64,
    pub pair_max_wrist_px: f64,
    pub pair_min_overlap_ms: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold_deg: 148.0,
            shoulder_min_deg: 90.0,
            min_duration_ms: 200.0,
            merge_gap_frames: 1,
            sd_k: 1.0,
            pair_max_wrist_px: 120.0,
            pair_min_overlap_ms: 120.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.threshold_deg > 0.0 && self.threshold_deg <= 180.0) {
            return bad(format!("threshold must be in (0, 180], got {}", self.threshold_deg));
        }
        if !(0.0..=180.0).contains(&self.shoulder_min_deg) {
            return bad(format!(
                "shoulder minimum must be in [0, 180], got {}",
                self.shoulder_min_deg
            ));
        }
        if !(self.min_duration_ms >= 0.0 && self.min_duration_ms.is_finite()) {
            return bad(format!("min duration must be >= 0, got {}", self.min_duration_ms));
        }
        if !(self.sd_k.is_finite() && self.sd_k >= 0.0) {
            return bad(format!("sd_k must be >= 0, got {}", self.sd_k));
        }
        if !(self.pair_max_wrist_px >= 0.0 && self.pair_min_overlap_ms >= 0.0) {
            return bad("pairing limits must be >= 0".into());
        }
        Ok(())
    }
}

/// True iff the elbow angle reaches T and the shoulder-neck angle reaches its minimum.
pub fn extended_arm(elbow_deg: Option<f64>, shoulder_neck_deg: Option<f64>, cfg: &DetectorConfig) -> bool {
    match (elbow_deg, shoulder_neck_deg) {
        (Some(x), Some(y)) => x >= cfg.threshold_deg && y >= cfg.shoulder_min_deg,
        _ => false,
    }
}

/// Inclusive index range into `series.samples`.
type Span = (usize, usize);

/// Groups qualifying sample indices into runs of consecutive frames, then
/// merges runs whose frame gap is at most `merge_gap`.
fn qualifying_runs(series: &AngleSeries, qualifies: impl Fn(usize) -> bool, merge_gap: u64) -> Vec<Span> {
    let samples = &series.samples;
    let mut runs: Vec<Span> = Vec::new();
    for i in (0..samples.len()).filter(|&i| qualifies(i)) {
        match runs.last_mut() {
            Some((_, end)) if samples[i].frame - samples[*end].frame - 1 <= merge_gap => *end = i,
            _ => runs.push((i, i)),
        }
    }
    runs
}

fn episode_from_span(series: &AngleSeries, (a, b): Span, rule: Rule) -> SuspicionEpisode {
    let samples = &series.samples[a..=b];
    let angles: Vec<f64> = samples.iter().filter_map(|s| s.elbow_angle_deg).collect();
    let peak = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = angles.iter().sum::<f64>() / angles.len() as f64;
    SuspicionEpisode {
        track_id: series.track_id,
        side: series.side,
        start_frame: samples[0].frame,
        end_frame: samples[samples.len() - 1].frame,
        start_ms: samples[0].timestamp_ms,
        end_ms: samples[samples.len() - 1].timestamp_ms,
        peak_elbow_angle_deg: peak,
        mean_elbow_angle_deg: mean,
        rule,
        partner: None,
    }
}

/// Duration-gated runs of the extended-arm rule.
///
/// Frames absent from the series count as non-qualifying. Peak and mean are
/// taken over every present elbow sample in the merged span.
pub fn detect_episodes(series: &AngleSeries, cfg: &DetectorConfig) -> Vec<SuspicionEpisode> {
    let period = series.frame_period_ms();
    let samples = &series.samples;
    qualifying_runs(
        series,
        |i| extended_arm(samples[i].elbow_angle_deg, samples[i].shoulder_neck_angle_deg, cfg),
        cfg.merge_gap_frames,
    )
    .into_iter()
    .filter(|&(a, b)| samples[b].timestamp_ms - samples[a].timestamp_ms + period >= cfg.min_duration_ms)
    .map(|span| episode_from_span(series, span, Rule::ExtendedArm))
    .collect()
}

/// Frames whose elbow angle exceeds `mean + sd_k * sd`, coalesced over consecutive frames.
pub fn sd_outliers(series: &AngleSeries, cfg: &DetectorConfig) -> Vec<SuspicionEpisode> {
    let stats = person_stats(series);
    let (Some(mean), Some(sd)) = (stats.mean, stats.sd) else {
        return Vec::new();
    };
    if stats.n < SD_MIN_SAMPLES || sd == 0.0 {
        return Vec::new();
    }
    let limit = mean + cfg.sd_k * sd;
    let samples = &series.samples;
    qualifying_runs(series, |i| samples[i].elbow_angle_deg.is_some_and(|x| x > limit), 0)
        .into_iter()
        .map(|span| episode_from_span(series, span, Rule::SdOutlier))
        .collect()
}

/// Pairs of extended-arm episodes on distinct tracks that overlap in time and
/// bring the extended-side wrists within reach of each other.
///
/// Each qualifying pair yields one candidate spanning the overlap, attributed to
/// the lower track id with the other recorded as partner. `tracks` should be the
/// same (interpolated) tracks the episodes were computed from.
pub fn exchange_candidates(
    episodes: &[SuspicionEpisode],
    tracks: &[PersonTrack],
    fps: f64,
    layout: KeypointLayout,
    cfg: &DetectorConfig,
) -> Vec<SuspicionEpisode> {
    let period = 1000.0 / fps;
    let by_id: HashMap<TrackId, &PersonTrack> = tracks.iter().map(|t| (t.track_id, t)).collect();
    let mut eps: Vec<&SuspicionEpisode> = episodes.iter().filter(|e| e.rule == Rule::ExtendedArm).collect();
    eps.sort_by(|a, b| {
        (a.track_id, a.start_frame, a.side)
            .cmp(&(b.track_id, b.start_frame, b.side))
            .then(a.end_frame.cmp(&b.end_frame))
    });

    let mut out = Vec::new();
    for (i, a) in eps.iter().enumerate() {
        for b in &eps[i + 1..] {
            if a.track_id == b.track_id {
                continue;
            }
            let start_frame = a.start_frame.max(b.start_frame);
            let end_frame = a.end_frame.min(b.end_frame);
            if start_frame > end_frame {
                continue;
            }
            let start_ms = a.start_ms.max(b.start_ms);
            let end_ms = a.end_ms.min(b.end_ms);
            if end_ms - start_ms + period < cfg.pair_min_overlap_ms {
                continue;
            }
            let (Some(ta), Some(tb)) = (by_id.get(&a.track_id), by_id.get(&b.track_id)) else {
                continue;
            };
            let wrist_a = layout.slot(Landmark::Wrist(a.side));
            let wrist_b = layout.slot(Landmark::Wrist(b.side));
            let closest = ta
                .skeletons
                .iter()
                .filter(|s| (start_frame..=end_frame).contains(&s.frame))
                .filter_map(|sa| {
                    let sb = tb.skeleton_at(sa.frame)?;
                    Some(sa.get(wrist_a)?.point().distance(&sb.get(wrist_b)?.point()))
                })
                .fold(f64::INFINITY, f64::min);
            if closest > cfg.pair_max_wrist_px {
                continue;
            }
            out.push(SuspicionEpisode {
                track_id: a.track_id,
                side: a.side,
                start_frame,
                end_frame,
                start_ms,
                end_ms,
                peak_elbow_angle_deg: a.peak_elbow_angle_deg.max(b.peak_elbow_angle_deg),
                mean_elbow_angle_deg: (a.mean_elbow_angle_deg + b.mean_elbow_angle_deg) / 2.0,
                rule: Rule::ExchangeCandidate,
                partner: Some(Partner {
                    track_id: b.track_id,
                    side: b.side,
                    min_wrist_distance_px: closest,
                }),
            });
        }
    }
    out
}
