//! `capstage`: synthesize a corpus, train in stages, evaluate, caption.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use capstage_core::corpus::{SplitName, Track};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "capstage", version, about = "Staged video captioning on feature corpora")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// JSON run configuration.
    #[arg(long, global = true, env = "CAPSTAGE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true, env = "CAPSTAGE_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "CAPSTAGE_OUT")]
    pub out: Option<PathBuf>,
    /// Overwrite a non-empty output directory.
    #[arg(long, global = true, env = "CAPSTAGE_FORCE")]
    pub force: bool,
    /// Caption track: english or chinese.
    #[arg(long, global = true, env = "CAPSTAGE_TRACK", value_parser = parse_track)]
    pub track: Option<Track>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic dataset.
    Synth {
        /// Number of training videos.
        #[arg(long)]
        videos: Option<usize>,
    },
    /// Run XE, ORACLE and SCST to completion.
    Train {
        #[arg(long, env = "CAPSTAGE_DATA")]
        data: Option<PathBuf>,
        /// Continue from `last.ckpt` in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Print a metric report for one split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, env = "CAPSTAGE_DATA")]
        data: Option<PathBuf>,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: SplitName,
    },
    /// Caption one video.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Appearance, motion and audio feature files.
        #[arg(long, num_args = 3, value_names = ["APP", "MOT", "AUD"], conflicts_with = "video")]
        features: Option<Vec<PathBuf>>,
        #[arg(long, requires = "features")]
        topic: Option<usize>,
        /// Video id from a dataset manifest.
        #[arg(long)]
        video: Option<String>,
        #[arg(long, env = "CAPSTAGE_DATA")]
        data: Option<PathBuf>,
        /// Print N sampled captions instead of the greedy one.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Compute 28x128 audio features from a 16 kHz mono WAV file.
    Audio {
        #[arg(long)]
        wav: PathBuf,
    },
}

fn parse_track(s: &str) -> Result<Track, String> {
    s.parse().map_err(|e: capstage_core::Error| e.to_string())
}

fn parse_split(s: &str) -> Result<SplitName, String> {
    SplitName::ALL
        .into_iter()
        .find(|n| n.as_str() == s)
        .ok_or_else(|| format!("unknown split `{s}` (train, val, test)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
