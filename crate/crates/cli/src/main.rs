use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exam_pose_cli::config::{DetectorOverrides, CONFIG_ENV};
use exam_pose_cli::{cmd_analyze, cmd_scatter, cmd_synth, AnalysisOptions, OutputFormat, EXIT_ERROR};
use exam_pose_core::model::{KeypointLayout, Side, TrackId};

#[derive(Parser)]
#[command(
    name = "exam-pose",
    version,
    about = "Flag sustained extended-arm episodes in exam-hall pose keypoints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a report. Exits 3 when episodes are found.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = OutputFormat::Report)]
        format: OutputFormat,
    },
    /// Export per-frame elbow and shoulder-neck angles for plotting.
    Scatter {
        #[command(flatten)]
        common: Common,
        /// Only these track ids (repeatable).
        #[arg(long = "track")]
        tracks: Vec<u32>,
        #[arg(long)]
        side: Option<Side>,
    },
    /// Render a scenario script into frame files and ground truth.
    Synth {
        #[arg(long)]
        script: PathBuf,
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Directory of per-frame keypoint files, or a consolidated CSV table.
    #[arg(long)]
    input: PathBuf,
    /// Frame rate of the source video.
    #[arg(long)]
    fps: f64,
    /// Elbow-angle threshold T in degrees.
    #[arg(long)]
    threshold: Option<f64>,
    /// Minimum shoulder-neck angle in degrees (0 disables).
    #[arg(long)]
    shoulder_min: Option<f64>,
    #[arg(long)]
    min_duration_ms: Option<f64>,
    /// Below-threshold frames bridged inside one episode.
    #[arg(long)]
    merge_gap: Option<u64>,
    #[arg(long)]
    sd_k: Option<f64>,
    /// Keypoint slot layout: `paper` or `body25-standard`.
    #[arg(long)]
    layout: Option<KeypointLayout>,
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            input: self.input.clone(),
            fps: self.fps,
            config: self.config.clone(),
            layout: self.layout,
            overrides: DetectorOverrides {
                threshold_deg: self.threshold,
                shoulder_min_deg: self.shoulder_min,
                min_duration_ms: self.min_duration_ms,
                merge_gap_frames: self.merge_gap,
                sd_k: self.sd_k,
                ..Default::default()
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze { common, format } => cmd_analyze(&common.options(), common.output.as_deref(), *format),
        Command::Scatter { common, tracks, side } => {
            let ids: Vec<TrackId> = tracks.iter().copied().map(TrackId).collect();
            cmd_scatter(&common.options(), &ids, *side, common.output.as_deref())
        }
        Command::Synth { script, output } => cmd_synth(script, output),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
