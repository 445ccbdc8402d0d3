//! Per-track time series: keypoint gap filling, angle extraction, median
//! smoothing and per-person statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{elbow_angle, shoulder_neck_angle};
use crate::model::{ArmAngleSample, Keypoint2D, KeypointLayout, PersonTrack, Side, TrackId, NUM_KEYPOINTS};

pub const DEFAULT_MAX_GAP_FRAMES: u64 = 10;
pub const DEFAULT_SMOOTH_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSeries {
    pub track_id: TrackId,
    pub side: Side,
    pub samples: Vec<ArmAngleSample>,
    pub fps: f64,
}

impl AngleSeries {
    pub fn frame_period_ms(&self) -> f64 {
        1000.0 / self.fps
    }

    pub fn present_elbow_angles(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().filter_map(|s| s.elbow_angle_deg)
    }
}

/// Fills short runs of missing keypoints by per-coordinate linear interpolation.
///
/// Gap length is measured in frame indices between the two bounding present
/// observations. Only skeletons that exist in the track are filled; leading and
/// trailing runs are left missing. Filled keypoints take the lower confidence of
/// the two endpoints.
pub fn interpolate_gaps(track: &PersonTrack, max_gap_frames: u64) -> PersonTrack {
    let mut out = track.clone();
    let skeletons = &mut out.skeletons;
    for slot in 0..NUM_KEYPOINTS {
        let mut prev: Option<(usize, Keypoint2D)> = None;
        for i in 0..skeletons.len() {
            let Some(kp) = skeletons[i].keypoints()[slot] else {
                continue;
            };
            if let Some((pi, pk)) = prev {
                let (f0, f1) = (skeletons[pi].frame, skeletons[i].frame);
                let gap = f1 - f0 - 1;
                if i > pi + 1 && gap <= max_gap_frames {
                    let confidence = pk.confidence.min(kp.confidence);
                    for s in &mut skeletons[pi + 1..i] {
                        let t = (s.frame - f0) as f64 / (f1 - f0) as f64;
                        let filled = Keypoint2D::new(pk.x + (kp.x - pk.x) * t, pk.y + (kp.y - pk.y) * t, confidence);
                        s.set(slot, Some(filled));
                    }
                }
            }
            prev = Some((i, kp));
        }
    }
    out
}

/// One angle sample per skeleton of the track.
pub fn extract_angle_series(track: &PersonTrack, side: Side, fps: f64, layout: KeypointLayout) -> AngleSeries {
    assert!(fps > 0.0, "fps must be positive");
    let samples = track
        .skeletons
        .iter()
        .map(|s| ArmAngleSample {
            frame: s.frame,
            timestamp_ms: s.timestamp_ms,
            side,
            elbow_angle_deg: elbow_angle(s, side, layout),
            shoulder_neck_angle_deg: shoulder_neck_angle(s, side, layout),
        })
        .collect();
    AngleSeries {
        track_id: track.track_id,
        side,
        samples,
        fps,
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn smooth_channel(
    samples: &[ArmAngleSample],
    half: u64,
    get: impl Fn(&ArmAngleSample) -> Option<f64>,
) -> Vec<Option<f64>> {
    let mut window = Vec::new();
    let mut lo = 0;
    samples
        .iter()
        .map(|s| {
            get(s)?;
            while samples[lo].frame + half < s.frame {
                lo += 1;
            }
            window.clear();
            window.extend(
                samples[lo..]
                    .iter()
                    .take_while(|n| n.frame <= s.frame + half)
                    .filter_map(&get),
            );
            Some(median(&mut window))
        })
        .collect()
}

/// Centered moving median over present samples, applied to both angle channels.
///
/// The window spans `window / 2` frames either side. Missing samples stay
/// missing and are excluded from their neighbours' windows; windows are
/// truncated at the series ends.
pub fn smooth_angles(series: &AngleSeries, window: usize) -> Result<AngleSeries> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::BadWindow(window));
    }
    let half = (window / 2) as u64;
    let elbow = smooth_channel(&series.samples, half, |s| s.elbow_angle_deg);
    let shoulder = smooth_channel(&series.samples, half, |s| s.shoulder_neck_angle_deg);
    let samples = series
        .samples
        .iter()
        .zip(elbow.into_iter().zip(shoulder))
        .map(|(s, (e, sh))| ArmAngleSample {
            elbow_angle_deg: e,
            shoulder_neck_angle_deg: sh,
            ..*s
        })
        .collect();
    Ok(AngleSeries {
        samples,
        ..series.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonStats {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

/// Mean and population standard deviation of the present elbow angles.
pub fn person_stats(series: &AngleSeries) -> PersonStats {
    let values: Vec<f64> = series.present_elbow_angles().collect();
    let n = values.len();
    if n == 0 {
        return PersonStats {
            mean: None,
            sd: None,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let all_equal = values.iter().all(|v| *v == values[0]);
    let sd = if all_equal {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let mean = if all_equal { values[0] } else { mean };
    PersonStats {
        mean: Some(mean),
        sd: Some(sd),
        n,
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes series as `track_id,side,frame,timestamp_ms,elbow_angle_deg,shoulder_neck_angle_deg`.
/// Missing angles are empty cells.
pub fn write_angle_table<'a, W: Write>(out: W, series: impl IntoIterator<Item = &'a AngleSeries>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record([
        "track_id",
        "side",
        "frame",
        "timestamp_ms",
        "elbow_angle_deg",
        "shoulder_neck_angle_deg",
    ])
    .map_err(io)?;
    for s in series {
        for sample in &s.samples {
            w.write_record([
                s.track_id.to_string(),
                s.side.to_string(),
                sample.frame.to_string(),
                sample.timestamp_ms.to_string(),
                opt_cell(sample.elbow_angle_deg),
                opt_cell(sample.shoulder_neck_angle_deg),
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}
