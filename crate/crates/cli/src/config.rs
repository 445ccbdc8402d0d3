//! Layered configuration: built-in defaults < config file < command-line flags.

use std::fs;
use std::path::Path;

use exam_pose_core::detect::DetectorConfig;
use exam_pose_core::model::KeypointLayout;
use exam_pose_core::pipeline::AnalysisConfig;
use serde::Deserialize;

use crate::CliError;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "EXAM_POSE_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorOverrides {
    pub threshold_deg: Option<f64>,
    pub shoulder_min_deg: Option<f64>,
    pub min_duration_ms: Option<f64>,
    pub merge_gap_frames: Option<u64>,
    pub sd_k: Option<f64>,
    pub pair_max_wrist_px: Option<f64>,
    pub pair_min_overlap_ms: Option<f64>,
}

impl DetectorOverrides {
    pub fn apply(&self, d: &mut DetectorConfig) {
        fn set<T: Copy>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        set(&mut d.threshold_deg, self.threshold_deg);
        set(&mut d.shoulder_min_deg, self.shoulder_min_deg);
        set(&mut d.min_duration_ms, self.min_duration_ms);
        set(&mut d.merge_gap_frames, self.merge_gap_frames);
        set(&mut d.sd_k, self.sd_k);
        set(&mut d.pair_max_wrist_px, self.pair_max_wrist_px);
        set(&mut d.pair_min_overlap_ms, self.pair_min_overlap_ms);
    }
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub layout: Option<KeypointLayout>,
    pub min_confidence: Option<f64>,
    pub max_displacement_px: Option<f64>,
    pub grace_frames: Option<u64>,
    pub max_gap_frames: Option<u64>,
    pub smooth_window: Option<usize>,
    #[serde(default)]
    pub detector: DetectorOverrides,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn apply(&self, cfg: &mut AnalysisConfig) {
        if let Some(v) = self.layout {
            cfg.layout = v;
        }
        if let Some(v) = self.min_confidence {
            cfg.min_confidence = v;
        }
        if let Some(v) = self.max_displacement_px {
            cfg.max_displacement_px = v;
        }
        if let Some(v) = self.grace_frames {
            cfg.grace_frames = v;
        }
        if let Some(v) = self.max_gap_frames {
            cfg.max_gap_frames = v;
        }
        if let Some(v) = self.smooth_window {
            cfg.smooth_window = v;
        }
        self.detector.apply(&mut cfg.detector);
    }
}

/// Builds the effective configuration from the three layers.
pub fn resolve(
    fps: f64,
    file: Option<&FileConfig>,
    layout: Option<KeypointLayout>,
    flags: &DetectorOverrides,
) -> AnalysisConfig {
    let mut cfg = AnalysisConfig::new(fps);
    if let Some(file) = file {
        file.apply(&mut cfg);
    }
    if let Some(layout) = layout {
        cfg.layout = layout;
    }
    flags.apply(&mut cfg.detector);
    cfg
}
