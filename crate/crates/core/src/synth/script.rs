//! Scenario scripts: the declarative description of a synthetic exam session.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KeypointLayout, Side};

pub const DEFAULT_JITTER_PX: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    #[serde(rename = "Shake_Hands")]
    ShakeHands,
    #[serde(rename = "Exchange_Object")]
    ExchangeObject,
    #[serde(rename = "Use_Phone")]
    UsePhone,
    #[serde(rename = "Throw_Object")]
    ThrowObject,
    #[serde(rename = "Idle")]
    Idle,
    #[serde(rename = "Raise_Side")]
    RaiseSide,
}

impl ActionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActionKind::ShakeHands => "Shake_Hands",
            ActionKind::ExchangeObject => "Exchange_Object",
            ActionKind::UsePhone => "Use_Phone",
            ActionKind::ThrowObject => "Throw_Object",
            ActionKind::Idle => "Idle",
            ActionKind::RaiseSide => "Raise_Side",
        }
    }

    pub fn needs_partner(&self) -> bool {
        matches!(self, ActionKind::ShakeHands | ActionKind::ExchangeObject)
    }

    /// Whether the action straightens the arm past the default threshold.
    pub fn extends_arm(&self) -> bool {
        matches!(
            self,
            ActionKind::ShakeHands | ActionKind::ExchangeObject | ActionKind::ThrowObject | ActionKind::RaiseSide
        )
    }

    /// Held (elbow, shoulder-neck) angles in degrees, or `None` for no arm motion.
    pub(crate) fn target_angles(&self) -> Option<(f64, f64)> {
        match self {
            ActionKind::ExchangeObject => Some((168.0, 160.0)),
            ActionKind::ShakeHands => Some((160.0, 125.0)),
            ActionKind::ThrowObject => Some((175.0, 150.0)),
            ActionKind::RaiseSide => Some((175.0, 170.0)),
            ActionKind::UsePhone => Some((70.0, 105.0)),
            ActionKind::Idle => None,
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A seat reference written as `[row, col]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct SeatRef {
    pub row: u32,
    pub col: u32,
}

impl From<[u32; 2]> for SeatRef {
    fn from([row, col]: [u32; 2]) -> Self {
        Self { row, col }
    }
}

impl From<SeatRef> for [u32; 2] {
    fn from(s: SeatRef) -> Self {
        [s.row, s.col]
    }
}

impl fmt::Display for SeatRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}c{}", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seat {
    pub row: u32,
    pub col: u32,
    /// Neck position in pixels.
    pub x: f64,
    pub y: f64,
}

impl Seat {
    pub fn seat_ref(&self) -> SeatRef {
        SeatRef {
            row: self.row,
            col: self.col,
        }
    }
}

/// Shorthand for a regular block of seats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeatGrid {
    pub rows: u32,
    pub cols: u32,
    #[serde(default = "default_origin")]
    pub origin: [f64; 2],
    #[serde(default = "default_spacing")]
    pub spacing: [f64; 2],
}

fn default_origin() -> [f64; 2] {
    [200.0, 160.0]
}

fn default_spacing() -> [f64; 2] {
    [260.0, 220.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub actor: SeatRef,
    pub kind: ActionKind,
    pub start_frame: u64,
    pub end_frame: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<SeatRef>,
    /// Arm to animate. Defaults to the side facing the partner, else Right.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
}

fn default_jitter() -> f64 {
    DEFAULT_JITTER_PX
}

fn default_conf_floor() -> f64 {
    1.0
}

fn default_prefix() -> String {
    "session".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub seed: u64,
    pub fps: f64,
    pub duration_frames: u64,
    #[serde(default = "default_jitter")]
    pub jitter_px: f64,
    /// Per-keypoint dropout probability applied after generation.
    #[serde(default)]
    pub dropout: f64,
    /// Lower bound of the random confidence scale applied to surviving keypoints.
    #[serde(default = "default_conf_floor")]
    pub confidence_floor: f64,
    #[serde(default)]
    pub layout: KeypointLayout,
    #[serde(default = "default_prefix")]
    pub file_prefix: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<SeatGrid>,
    #[serde(default)]
    pub seats: Vec<Seat>,
    #[serde(default)]
    pub actions: Vec<Action>,
}

/// One animated arm: which seat, which side, over which frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ArmAssignment {
    pub seat: usize,
    pub side: Side,
    pub start_frame: u64,
    pub end_frame: u64,
    pub kind: ActionKind,
}

/// Side of `from` that faces `to`: the person's right arm is on the image left.
fn facing_side(from: &Seat, to: &Seat) -> Side {
    if to.x > from.x {
        Side::Left
    } else {
        Side::Right
    }
}

impl ScenarioScript {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let script: ScenarioScript = toml::from_str(text).map_err(|e| Error::InvalidScript(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("script serialisation cannot fail")
    }

    /// Explicit seats plus the grid, ordered by (row, col).
    pub fn resolved_seats(&self) -> Result<Vec<Seat>> {
        let mut seats: BTreeMap<SeatRef, Seat> = BTreeMap::new();
        if let Some(g) = &self.grid {
            for row in 0..g.rows {
                for col in 0..g.cols {
                    let seat = Seat {
                        row,
                        col,
                        x: g.origin[0] + col as f64 * g.spacing[0],
                        y: g.origin[1] + row as f64 * g.spacing[1],
                    };
                    seats.insert(seat.seat_ref(), seat);
                }
            }
        }
        for (i, seat) in self.seats.iter().enumerate() {
            if !(seat.x.is_finite() && seat.y.is_finite()) {
                return Err(Error::InvalidScript(format!("seats[{i}]: position must be finite")));
            }
            if self.grid.is_none() && seats.contains_key(&seat.seat_ref()) {
                return Err(Error::InvalidScript(format!(
                    "seats[{i}]: duplicate seat {}",
                    seat.seat_ref()
                )));
            }
            seats.insert(seat.seat_ref(), *seat);
        }
        Ok(seats.into_values().collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.arm_assignments().map(|_| ())
    }

    /// Validates the script and expands actions into per-arm assignments.
    pub(crate) fn arm_assignments(&self) -> Result<Vec<ArmAssignment>> {
        let err = |msg: String| Err(Error::InvalidScript(msg));
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return err(format!("fps: must be positive, got {}", self.fps));
        }
        if self.duration_frames == 0 {
            return err("duration_frames: must be at least 1".into());
        }
        if !(self.jitter_px.is_finite() && self.jitter_px >= 0.0) {
            return err(format!("jitter_px: must be >= 0, got {}", self.jitter_px));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return err(format!("dropout: must be in [0, 1], got {}", self.dropout));
        }
        if !(0.0..=1.0).contains(&self.confidence_floor) {
            return err(format!(
                "confidence_floor: must be in [0, 1], got {}",
                self.confidence_floor
            ));
        }
        let seats = self.resolved_seats()?;
        if seats.is_empty() {
            return err("seats: no seats defined (use [grid] or [[seats]])".into());
        }
        let index_of = |r: SeatRef| seats.iter().position(|s| s.seat_ref() == r);

        let mut arms = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            let at = format!("actions[{i}]");
            if a.start_frame > a.end_frame {
                return err(format!(
                    "{at}: start_frame {} is after end_frame {}",
                    a.start_frame, a.end_frame
                ));
            }
            if a.end_frame >= self.duration_frames {
                return err(format!(
                    "{at}: end_frame {} is outside the {}-frame session",
                    a.end_frame, self.duration_frames
                ));
            }
            let Some(actor) = index_of(a.actor) else {
                return err(format!("{at}.actor: no seat {}", a.actor));
            };
            let partner = match (a.partner, a.kind.needs_partner()) {
                (None, true) => return err(format!("{at}.partner: required for {}", a.kind)),
                (None, false) => None,
                (Some(p), _) => match index_of(p) {
                    None => return err(format!("{at}.partner: no seat {p}")),
                    Some(j) if j == actor => return err(format!("{at}.partner: same seat as actor")),
                    Some(j) => Some(j),
                },
            };
            let side = a.side.unwrap_or_else(|| match partner {
                Some(j) => facing_side(&seats[actor], &seats[j]),
                None => Side::Right,
            });
            let push = |arms: &mut Vec<ArmAssignment>, seat, side| {
                arms.push(ArmAssignment {
                    seat,
                    side,
                    start_frame: a.start_frame,
                    end_frame: a.end_frame,
                    kind: a.kind,
                })
            };
            push(&mut arms, actor, side);
            if let (Some(j), true) = (partner, a.kind.needs_partner()) {
                push(&mut arms, j, facing_side(&seats[j], &seats[actor]));
            }
        }
        for (i, a) in arms.iter().enumerate() {
            for b in &arms[i + 1..] {
                let overlap = a.start_frame <= b.end_frame && b.start_frame <= a.end_frame;
                if overlap
                    && a.seat == b.seat
                    && a.side == b.side
                    && a.kind != ActionKind::Idle
                    && b.kind != ActionKind::Idle
                {
                    return err(format!(
                        "actions: {} arm of seat {} is animated by two overlapping actions ({} and {})",
                        a.side,
                        seats[a.seat].seat_ref(),
                        a.kind,
                        b.kind
                    ));
                }
            }
        }
        Ok(arms)
    }
}
