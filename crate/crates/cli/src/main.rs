//! `motion-lsmd`: detect, track, decompose, synth and eval subcommands over the library.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use motion_lsmd::Error;

#[derive(Parser, Debug)]
#[command(name = "motion-lsmd", version, about = "Action-activity detection from frame differences")]
struct Cli {
    /// Echo the effective config and progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// Flat `key = value` config file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable, applied after the file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score every frame and write detected activity intervals
    Detect {
        /// Directory of .pgm frames, or a manifest listing one frame per line
        frames: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "scores.csv")]
        out: PathBuf,
        #[arg(long, default_value = "events.csv")]
        events: PathBuf,
    },
    /// Track one target through the sequence
    Track {
        frames: PathBuf,
        /// Initial state "lx,ly,theta,s,alpha,phi"; falls back to tracker.init
        #[arg(long)]
        init: Option<String>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "track.csv")]
        out: PathBuf,
    },
    /// Split a feature matrix into low-rank and tree-sparse parts
    Decompose {
        /// Matrix CSV, one column per proposal
        features: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Writes PREFIX_L.csv, PREFIX_S.csv and PREFIX_obj.csv
        #[arg(long, value_name = "PREFIX")]
        out_prefix: PathBuf,
    },
    /// Render a synthetic sequence with labelled events
    Synth {
        /// Scene spec CSV; without it a random 64x64, 100-frame scene is drawn from the seed
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Match detected events against truth and emit a report row
    Eval {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        name: String,
        /// Total frames for the row; defaults to one past the last annotated frame
        #[arg(long)]
        frames: Option<i64>,
        /// Report to create or extend; without it the report goes to stdout
        #[arg(long, value_name = "REPORT")]
        append: Option<PathBuf>,
    },
}

/// Exit 1 for bad input, 2 for everything that is our fault.
#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_)
            | Error::LikelihoodsUnset
            | Error::EmptyDictionary(_)
            | Error::EmptyScores
            | Error::ShapeMismatch(_) => Failure::Internal(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("MOTION_LSMD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Input(format!("MOTION_LSMD_THREADS: `{raw}` is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                ErrorKind::InvalidSubcommand => {
                    eprintln!("\n{}", Cli::command().render_help());
                    ExitCode::from(1)
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = init_threads().and_then(|()| commands::run(cli.command, cli.verbose));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(msg) | Failure::Internal(msg)) = &f;
            eprintln!("motion-lsmd: {msg}");
            ExitCode::from(f.code())
        }
    }
}
