//! Core value types: keypoints, skeletons, tracks, angle samples and episodes.
//!
//! Everything here is plain immutable data. The only behaviour is
//! construction-time validation and the landmark-to-slot map.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of slots in the 25-point body layout.
pub const NUM_KEYPOINTS: usize = 25;

/// Keypoints whose confidence falls below this are treated as missing.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint2D {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint2D {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Self { x, y, confidence }
    }

    pub fn point(&self) -> crate::geometry::Point2 {
        crate::geometry::Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Left => "Left",
            Side::Right => "Right",
        }
    }

    pub fn opposite(&self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

/// The seven landmarks used by the arm analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Landmark {
    Neck,
    Shoulder(Side),
    Elbow(Side),
    Wrist(Side),
}

impl Landmark {
    pub const ANALYSIS: [Landmark; 7] = [
        Landmark::Neck,
        Landmark::Shoulder(Side::Left),
        Landmark::Elbow(Side::Left),
        Landmark::Wrist(Side::Left),
        Landmark::Shoulder(Side::Right),
        Landmark::Elbow(Side::Right),
        Landmark::Wrist(Side::Right),
    ];
}

/// A slot in the 25-point layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeypointSlot(u8);

impl KeypointSlot {
    pub fn new(index: usize) -> Option<Self> {
        (index < NUM_KEYPOINTS).then_some(Self(index as u8))
    }

    pub fn index(&self) -> usize {
        self.0 as usize
    }
}

/// Which slot each analysis landmark occupies.
///
/// `Paper` puts the left arm in slots 2..=4 and the right arm in 5..=7.
/// `Body25Standard` is the common detector convention with the sides swapped.
/// The neck sits in slot 1 in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeypointLayout {
    #[default]
    Paper,
    Body25Standard,
}

impl KeypointLayout {
    pub fn slot(&self, landmark: Landmark) -> KeypointSlot {
        let first_arm = |side: Side| match (self, side) {
            (KeypointLayout::Paper, Side::Left) => 2,
            (KeypointLayout::Paper, Side::Right) => 5,
            (KeypointLayout::Body25Standard, Side::Right) => 2,
            (KeypointLayout::Body25Standard, Side::Left) => 5,
        };
        let index = match landmark {
            Landmark::Neck => 1,
            Landmark::Shoulder(side) => first_arm(side),
            Landmark::Elbow(side) => first_arm(side) + 1,
            Landmark::Wrist(side) => first_arm(side) + 2,
        };
        KeypointSlot(index)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            KeypointLayout::Paper => "paper",
            KeypointLayout::Body25Standard => "body25-standard",
        }
    }
}

impl std::str::FromStr for KeypointLayout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper" => Ok(KeypointLayout::Paper),
            "body25-standard" | "body25" => Ok(KeypointLayout::Body25Standard),
            other => Err(format!("unknown keypoint layout `{other}`")),
        }
    }
}

/// One person's 25 keypoints in one frame. `None` means missing.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    keypoints: [Option<Keypoint2D>; NUM_KEYPOINTS],
    pub frame: u64,
    pub timestamp_ms: f64,
}

impl Skeleton {
    pub fn keypoints(&self) -> &[Option<Keypoint2D>; NUM_KEYPOINTS] {
        &self.keypoints
    }

    pub fn get(&self, slot: KeypointSlot) -> Option<&Keypoint2D> {
        self.keypoints[slot.index()].as_ref()
    }

    pub fn landmark(&self, layout: KeypointLayout, landmark: Landmark) -> Option<&Keypoint2D> {
        self.get(layout.slot(landmark))
    }

    pub fn present_count(&self) -> usize {
        self.keypoints.iter().filter(|k| k.is_some()).count()
    }

    /// Replaces one slot without re-running the confidence gate.
    pub(crate) fn set(&mut self, slot: usize, kp: Option<Keypoint2D>) {
        self.keypoints[slot] = kp;
    }

    /// Applies `f` to every present keypoint, keeping confidence.
    pub fn map_points(&self, f: impl Fn(f64, f64) -> (f64, f64)) -> Skeleton {
        let mut out = self.clone();
        for kp in out.keypoints.iter_mut().flatten() {
            let (x, y) = f(kp.x, kp.y);
            kp.x = x;
            kp.y = y;
        }
        out
    }
}

/// Builds a [`Skeleton`] from raw detector slots.
///
/// A keypoint is missing when its confidence is zero or below `min_confidence`.
pub fn validate_skeleton(
    raw: &[Option<Keypoint2D>],
    frame: u64,
    timestamp_ms: f64,
    min_confidence: f64,
) -> Result<Skeleton> {
    if raw.len() != NUM_KEYPOINTS {
        return Err(Error::LengthMismatch(raw.len()));
    }
    if timestamp_ms.is_nan() || timestamp_ms < 0.0 {
        return Err(Error::NegativeTime(timestamp_ms));
    }
    let mut keypoints = [None; NUM_KEYPOINTS];
    for (slot, kp) in raw.iter().enumerate() {
        let Some(kp) = kp else { continue };
        if !(0.0..=1.0).contains(&kp.confidence) {
            return Err(Error::InvalidKeypoint {
                slot,
                reason: format!("confidence {} outside [0, 1]", kp.confidence),
            });
        }
        if kp.confidence == 0.0 || kp.confidence < min_confidence {
            continue;
        }
        if !kp.x.is_finite() || !kp.y.is_finite() {
            return Err(Error::InvalidKeypoint {
                slot,
                reason: "non-finite coordinate".into(),
            });
        }
        keypoints[slot] = Some(*kp);
    }
    Ok(Skeleton {
        keypoints,
        frame,
        timestamp_ms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackId(pub u32);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Frame-ordered skeletons attributed to one student.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonTrack {
    pub track_id: TrackId,
    pub skeletons: Vec<Skeleton>,
    pub seat_hint: Option<String>,
}

impl PersonTrack {
    pub fn new(track_id: TrackId) -> Self {
        Self {
            track_id,
            skeletons: Vec::new(),
            seat_hint: None,
        }
    }

    /// Appends a skeleton; its frame must be after the last one.
    pub fn push(&mut self, skeleton: Skeleton) -> Result<()> {
        if let Some(last) = self.skeletons.last() {
            if skeleton.frame <= last.frame {
                return Err(Error::InvalidConfig(format!(
                    "track {}: frame {} does not follow frame {}",
                    self.track_id, skeleton.frame, last.frame
                )));
            }
            if skeleton.timestamp_ms < last.timestamp_ms {
                return Err(Error::NegativeTime(skeleton.timestamp_ms - last.timestamp_ms));
            }
        }
        self.skeletons.push(skeleton);
        Ok(())
    }

    pub fn skeleton_at(&self, frame: u64) -> Option<&Skeleton> {
        self.skeletons
            .binary_search_by_key(&frame, |s| s.frame)
            .ok()
            .map(|i| &self.skeletons[i])
    }

    pub fn first_frame(&self) -> Option<u64> {
        self.skeletons.first().map(|s| s.frame)
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.skeletons.last().map(|s| s.frame)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmAngleSample {
    pub frame: u64,
    pub timestamp_ms: f64,
    pub side: Side,
    pub elbow_angle_deg: Option<f64>,
    pub shoulder_neck_angle_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    ExtendedArm,
    SdOutlier,
    ExchangeCandidate,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::ExtendedArm => "ExtendedArm",
            Rule::SdOutlier => "SdOutlier",
            Rule::ExchangeCandidate => "ExchangeCandidate",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The second party of an exchange candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partner {
    pub track_id: TrackId,
    pub side: Side,
    pub min_wrist_distance_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspicionEpisode {
    pub track_id: TrackId,
    pub side: Side,
    pub start_frame: u64,
    pub end_frame: u64,
    pub start_ms: f64,
    pub end_ms: f64,
    pub peak_elbow_angle_deg: f64,
    pub mean_elbow_angle_deg: f64,
    pub rule: Rule,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partner: Option<Partner>,
}

impl SuspicionEpisode {
    pub fn frame_count(&self) -> u64 {
        self.end_frame - self.start_frame + 1
    }

    /// Duration including the last frame's own period.
    pub fn duration_ms(&self, fps: f64) -> f64 {
        self.end_ms - self.start_ms + 1000.0 / fps
    }
}
