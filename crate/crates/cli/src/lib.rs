//! Command implementations behind the `exam-pose` binary.
//!
//! Each command returns an [`Outcome`] carrying the process exit code so the
//! commands can be driven from tests without spawning a process.

pub mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use exam_pose_core::ingest::load_frames;
use exam_pose_core::model::{KeypointLayout, Side, TrackId};
use exam_pose_core::pipeline::{analyze, process_tracks, write_scatter_table, AnalysisConfig, AnalysisReport};
use exam_pose_core::synth::{generate, ScenarioScript};
use thiserror::Error;

use config::{resolve, DetectorOverrides, FileConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
/// Analysis succeeded and found at least one episode.
pub const EXIT_EPISODES: u8 = 3;

#[derive(Error, Debug)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] exam_pose_core::Error),

    #[error("config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("invalid script {}: {message}", path.display())]
    Script { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    /// Structured JSON report.
    #[default]
    Report,
    /// Flat CSV episode table.
    Table,
}

/// Options shared by `analyze` and `scatter`.
#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    pub input: PathBuf,
    pub fps: f64,
    pub config: Option<PathBuf>,
    pub layout: Option<KeypointLayout>,
    pub overrides: DetectorOverrides,
}

impl AnalysisOptions {
    pub fn effective_config(&self) -> Result<AnalysisConfig, CliError> {
        let file = self.config.as_deref().map(FileConfig::load).transpose()?;
        let cfg = resolve(self.fps, file.as_ref(), self.layout, &self.overrides);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: u8,
}

fn write_output(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, bytes)?;
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Runs the full pipeline and returns the report.
pub fn run_analysis(opts: &AnalysisOptions) -> Result<AnalysisReport, CliError> {
    let cfg = opts.effective_config()?;
    let frames = load_frames(&opts.input, cfg.fps, cfg.min_confidence)?;
    Ok(analyze(frames, &cfg)?)
}

pub fn render_report(report: &AnalysisReport, format: OutputFormat) -> Result<Vec<u8>, CliError> {
    Ok(match format {
        OutputFormat::Report => report.to_json().into_bytes(),
        OutputFormat::Table => {
            let mut buf = Vec::new();
            report.write_episode_table(&mut buf)?;
            buf
        }
    })
}

/// Exit 0 when nothing was flagged, 3 when at least one episode was found.
pub fn cmd_analyze(opts: &AnalysisOptions, output: Option<&Path>, format: OutputFormat) -> Result<Outcome, CliError> {
    let report = run_analysis(opts)?;
    write_output(output, &render_report(&report, format)?)?;
    let exit_code = if report.episodes.is_empty() {
        EXIT_OK
    } else {
        EXIT_EPISODES
    };
    Ok(Outcome { exit_code })
}

pub fn cmd_scatter(
    opts: &AnalysisOptions,
    tracks: &[TrackId],
    side: Option<Side>,
    output: Option<&Path>,
) -> Result<Outcome, CliError> {
    let cfg = opts.effective_config()?;
    let frames = load_frames(&opts.input, cfg.fps, cfg.min_confidence)?;
    let processed = process_tracks(frames, &cfg)?;
    let mut buf = Vec::new();
    write_scatter_table(&mut buf, &processed, cfg.detector.threshold_deg, tracks, side)?;
    write_output(output, &buf)?;
    Ok(Outcome { exit_code: EXIT_OK })
}

pub fn cmd_synth(script_path: &Path, output_dir: &Path) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(script_path)?;
    let script_err = |e: exam_pose_core::Error| CliError::Script {
        path: script_path.to_path_buf(),
        message: match e {
            exam_pose_core::Error::InvalidScript(m) => m,
            other => other.to_string(),
        },
    };
    let script = ScenarioScript::from_toml_str(&text).map_err(script_err)?;
    let session = generate(&script).map_err(script_err)?;
    session.write_dir(output_dir)?;
    Ok(Outcome { exit_code: EXIT_OK })
}
