//! Deterministic synthetic exam-hall keypoint streams with ground truth.
//!
//! Seats hold a seated idle pose. Scripted actions animate one arm (and the
//! partner's facing arm for two-person actions) through eased ramps between the
//! idle pose and a held target pose. Gaussian jitter and optional keypoint
//! dropout are applied on top.

mod generate;
mod script;

pub use generate::{degrade, generate, GroundTruth, GroundTruthInterval, SyntheticSession};
pub use script::{Action, ActionKind, ScenarioScript, Seat, SeatGrid, SeatRef, DEFAULT_JITTER_PX};
