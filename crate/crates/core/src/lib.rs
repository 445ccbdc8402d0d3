//! Offline analysis of per-frame pose keypoints from exam-hall recordings.
//!
//! The pipeline parses pose-estimator output ([`ingest`]), associates
//! detections into per-student tracks, derives elbow and shoulder-neck angle
//! series ([`geometry`], [`series`]), and flags sustained extended-arm episodes
//! and pairwise exchange candidates ([`detect`]). [`synth`] produces labelled
//! synthetic sessions in the same file format.

pub mod detect;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
