//! Pose-estimator output parsing and per-student track association.

mod format;
mod tracking;

pub use format::{
    frame_file_name, frame_number_from_name, frame_timestamp_ms, list_frame_files, load_frames, parse_frame_file,
    parse_table_file, FrameFile, FrameObservation, FramePerson, TRIPLE_VALUES,
};
pub use tracking::{
    anchor_point, build_distance_matrix, build_tracks, greedy_match, DistanceMatrix, Tracker, TrackerConfig,
    DEFAULT_GRACE_FRAMES, DEFAULT_MAX_DISPLACEMENT_PX,
};
