//! Kinematic keypoint generation and degradation.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Vector2};
use crate::ingest::{frame_file_name, FrameFile, FramePerson, TRIPLE_VALUES};
use crate::model::{KeypointLayout, Landmark, Side, NUM_KEYPOINTS};

use super::script::{ActionKind, ArmAssignment, ScenarioScript, Seat};

const SHOULDER_HALF_WIDTH: f64 = 40.0;
const SHOULDER_DROP: f64 = 6.0;
const UPPER_ARM: f64 = 55.0;
const FOREARM: f64 = 50.0;
const MAX_RAMP_FRAMES: u64 = 8;

/// Static offsets from the neck for the non-arm slots that stay visible above a desk.
const BODY_OFFSETS: [(usize, f64, f64); 9] = [
    (0, 0.0, -45.0),   // nose
    (8, 0.0, 110.0),   // mid hip
    (9, -25.0, 110.0), // right hip
    (12, 25.0, 110.0), // left hip
    (15, -8.0, -52.0), // right eye
    (16, 8.0, -52.0),  // left eye
    (17, -18.0, -48.0),
    (18, 18.0, -48.0),
    (1, 0.0, 0.0), // neck
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthInterval {
    /// Seat index in (row, col) order; equals the detection order in every frame.
    pub track: usize,
    pub seat: String,
    pub side: Side,
    pub start_frame: u64,
    pub end_frame: u64,
    pub action: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub intervals: Vec<GroundTruthInterval>,
}

impl GroundTruth {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for iv in &self.intervals {
            w.serialize(iv).map_err(|e| Error::Io(e.into()))?;
        }
        if self.intervals.is_empty() {
            w.write_record(["track", "seat", "side", "start_frame", "end_frame", "action"])
                .map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let intervals = r
            .deserialize()
            .collect::<std::result::Result<Vec<GroundTruthInterval>, _>>()
            .map_err(|e| Error::MalformedFile(e.to_string()))?;
        Ok(Self { intervals })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    pub fps: f64,
    pub seats: Vec<Seat>,
    pub frames: Vec<FrameFile>,
    pub ground_truth: GroundTruth,
    pub file_prefix: String,
}

impl SyntheticSession {
    /// Writes one keypoint file per frame plus `ground_truth.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (frame, file) in self.frames.iter().enumerate() {
            fs::write(
                dir.join(frame_file_name(&self.file_prefix, frame as u64)),
                file.to_json(),
            )?;
        }
        let mut gt = Vec::new();
        self.ground_truth.write_csv(&mut gt)?;
        fs::write(dir.join("ground_truth.csv"), gt)?;
        Ok(())
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Ease-in/ease-out envelope in [0, 1] for an action spanning `start..=end`.
pub(crate) fn action_weight(frame: u64, start: u64, end: u64) -> f64 {
    if frame < start || frame > end {
        return 0.0;
    }
    let len = end - start + 1;
    let ramp = (len / 8).clamp(1, MAX_RAMP_FRAMES) as f64;
    let up = (frame - start) as f64 / ramp;
    let down = (end - frame) as f64 / ramp;
    smoothstep(up.min(down).min(1.0))
}

fn rotate(v: Vector2, deg: f64) -> Vector2 {
    let (s, c) = deg.to_radians().sin_cos();
    Vector2::new(c * v.dx - s * v.dy, s * v.dx + c * v.dy)
}

fn unit(v: Vector2) -> Vector2 {
    v.scale(1.0 / v.norm())
}

/// +1 when the side sits on the image right of the neck.
fn outward(side: Side) -> f64 {
    match side {
        Side::Right => -1.0,
        Side::Left => 1.0,
    }
}

/// Places shoulder, elbow and wrist for the given elbow and shoulder-neck angles.
///
/// Image y grows downward. A shoulder-neck angle of 90 hangs the upper arm
/// straight down; 180 raises it sideways away from the body. The forearm bends
/// towards the body midline.
pub(crate) fn arm_points(neck: Point2, side: Side, elbow_deg: f64, shoulder_deg: f64) -> [Point2; 3] {
    let out = outward(side);
    let shoulder = Point2::new(neck.x + out * SHOULDER_HALF_WIDTH, neck.y + SHOULDER_DROP);
    let to_neck = unit(Vector2::new(neck.x - shoulder.x, neck.y - shoulder.y));
    let upper = rotate(to_neck, -out * shoulder_deg);
    let elbow = Point2::new(shoulder.x + UPPER_ARM * upper.dx, shoulder.y + UPPER_ARM * upper.dy);
    let fore = rotate(upper, out * (180.0 - elbow_deg));
    let wrist = Point2::new(elbow.x + FOREARM * fore.dx, elbow.y + FOREARM * fore.dy);
    [shoulder, elbow, wrist]
}

#[derive(Debug, Clone, Copy)]
struct IdlePose {
    elbow_deg: f64,
    shoulder_deg: f64,
}

fn idle_poses(seed: u64, seats: usize) -> Vec<[IdlePose; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    (0..seats)
        .map(|_| {
            let mut pose = || IdlePose {
                elbow_deg: rng.random_range(82.0..100.0),
                shoulder_deg: rng.random_range(95.0..105.0),
            };
            [pose(), pose()]
        })
        .collect()
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Noise-free (elbow, shoulder-neck) angles planned for one arm at one frame.
fn planned_angles(idle: IdlePose, arms: &[&ArmAssignment], frame: u64) -> (f64, f64) {
    let mut pose = (idle.elbow_deg, idle.shoulder_deg);
    for arm in arms {
        let Some((tx, ty)) = arm.kind.target_angles() else {
            continue;
        };
        let w = action_weight(frame, arm.start_frame, arm.end_frame);
        if w > 0.0 {
            pose = (
                idle.elbow_deg + w * (tx - idle.elbow_deg),
                idle.shoulder_deg + w * (ty - idle.shoulder_deg),
            );
        }
    }
    pose
}

fn person_triples(
    seat: &Seat,
    idle: &[IdlePose; 2],
    arms: &[&ArmAssignment],
    frame: u64,
    layout: KeypointLayout,
    rng: &mut ChaCha8Rng,
    jitter: &Normal<f64>,
) -> Vec<f64> {
    let neck = Point2::new(seat.x, seat.y);
    let mut points: [Option<Point2>; NUM_KEYPOINTS] = [None; NUM_KEYPOINTS];
    for (slot, dx, dy) in BODY_OFFSETS {
        points[slot] = Some(Point2::new(neck.x + dx, neck.y + dy));
    }
    for side in Side::BOTH {
        let side_arms: Vec<&ArmAssignment> = arms.iter().copied().filter(|a| a.side == side).collect();
        let (x, y) = planned_angles(idle[side_index(side)], &side_arms, frame);
        let [shoulder, elbow, wrist] = arm_points(neck, side, x, y);
        points[layout.slot(Landmark::Shoulder(side)).index()] = Some(shoulder);
        points[layout.slot(Landmark::Elbow(side)).index()] = Some(elbow);
        points[layout.slot(Landmark::Wrist(side)).index()] = Some(wrist);
    }
    let mut values = Vec::with_capacity(TRIPLE_VALUES);
    for p in points {
        match p {
            Some(p) => {
                let x = p.x + rng.sample(jitter);
                let y = p.y + rng.sample(jitter);
                let c = rng.random_range(0.7..0.95);
                values.extend([round3(x), round3(y), round3(c)]);
            }
            None => values.extend([0.0, 0.0, 0.0]),
        }
    }
    values
}

fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Renders a script into per-frame keypoint files and ground truth.
///
/// Every seat appears in every frame, in (row, col) order. Output depends only
/// on the script, so equal scripts give byte-identical files.
pub fn generate(script: &ScenarioScript) -> Result<SyntheticSession> {
    let assignments = script.arm_assignments()?;
    let seats = script.resolved_seats()?;
    let idle = idle_poses(script.seed, seats.len());
    let jitter = Normal::new(0.0, script.jitter_px).map_err(|e| Error::InvalidScript(format!("jitter_px: {e}")))?;
    let per_seat: Vec<Vec<&ArmAssignment>> = (0..seats.len())
        .map(|i| assignments.iter().filter(|a| a.seat == i).collect())
        .collect();

    let mut frames: Vec<FrameFile> = (0..script.duration_frames)
        .into_par_iter()
        .map(|frame| {
            let mut rng = frame_rng(script.seed, frame);
            let people = seats
                .iter()
                .enumerate()
                .map(|(i, seat)| FramePerson {
                    pose_keypoints_2d: person_triples(
                        seat,
                        &idle[i],
                        &per_seat[i],
                        frame,
                        script.layout,
                        &mut rng,
                        &jitter,
                    ),
                })
                .collect();
            FrameFile { people }
        })
        .collect();

    if script.dropout > 0.0 || script.confidence_floor < 1.0 {
        frames = degrade(
            &frames,
            script.dropout,
            script.confidence_floor,
            script.seed.wrapping_add(1),
        );
    }

    let intervals = assignments
        .iter()
        .map(|a| GroundTruthInterval {
            track: a.seat,
            seat: seats[a.seat].seat_ref().to_string(),
            side: a.side,
            start_frame: a.start_frame,
            end_frame: a.end_frame,
            action: a.kind,
        })
        .collect();

    Ok(SyntheticSession {
        fps: script.fps,
        seats,
        frames,
        ground_truth: GroundTruth { intervals },
        file_prefix: script.file_prefix.clone(),
    })
}

/// Drops each detected keypoint with probability `drop_rate` and scales the
/// confidence of the survivors by a uniform factor in `[conf_floor, 1]`.
///
/// Undetected keypoints (confidence 0) are left alone. `conf_floor = 1` keeps
/// confidences unchanged.
pub fn degrade(frames: &[FrameFile], drop_rate: f64, conf_floor: f64, seed: u64) -> Vec<FrameFile> {
    assert!((0.0..=1.0).contains(&drop_rate), "drop_rate must be in [0, 1]");
    assert!((0.0..=1.0).contains(&conf_floor), "conf_floor must be in [0, 1]");
    frames
        .par_iter()
        .enumerate()
        .map(|(i, file)| {
            let mut rng = frame_rng(seed, i as u64);
            let people = file
                .people
                .iter()
                .map(|p| {
                    let mut values = p.pose_keypoints_2d.clone();
                    for t in values.chunks_exact_mut(3) {
                        if t[2] <= 0.0 {
                            continue;
                        }
                        let drop = rng.random::<f64>() < drop_rate;
                        let scale = conf_floor + (1.0 - conf_floor) * rng.random::<f64>();
                        if drop {
                            t.copy_from_slice(&[0.0, 0.0, 0.0]);
                        } else if conf_floor < 1.0 {
                            t[2] = round3(t[2] * scale);
                        }
                    }
                    FramePerson {
                        pose_keypoints_2d: values,
                    }
                })
                .collect();
            FrameFile { people }
        })
        .collect()
}
