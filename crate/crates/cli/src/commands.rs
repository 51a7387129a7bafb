use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use motion_lsmd::config::parse_affine;
use motion_lsmd::detector::{
    aggregate_report, match_events, parse_report_rows, random_spec, run_detection, synth_sequence, EventInterval,
    ReportRow,
};
use motion_lsmd::ingest::{load_frame_sequence, write_frame_sequence};
use motion_lsmd::io::{
    events_to_csv, matrix_to_csv, read_events_csv, read_matrix_csv, read_synth_spec, read_truth_csv, scores_to_csv,
    trace_to_csv, track_to_csv, truth_to_csv,
};
use motion_lsmd::lsmd::{build_index_tree, decompose, TreeWeights};
use motion_lsmd::tracker::track_sequence;
use motion_lsmd::Config;

use crate::{Command, ConfigArgs, Failure};

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))
}

fn load_config(args: &ConfigArgs, verbose: bool) -> Result<Config, Failure> {
    let config = Config::load(args.config.as_deref(), &args.overrides)?;
    if verbose {
        eprint!("{}", config.dump());
    }
    Ok(config)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = OsString::from(prefix.as_os_str());
    name.push(suffix);
    PathBuf::from(name)
}

pub fn run(command: Command, verbose: bool) -> Result<(), Failure> {
    match command {
        Command::Detect {
            frames,
            config,
            out,
            events,
        } => {
            let config = load_config(&config, verbose)?;
            let seq = load_frame_sequence(&frames)?;
            info!("{} frames of {:?} from {}", seq.len(), seq.dims(), frames.display());
            let result = run_detection(&seq, &config.effective_detection())?;
            info!("{} events", result.events.len());
            write(&out, &scores_to_csv(&result.scores))?;
            write(&events, &events_to_csv(&result.events))
        }
        Command::Track {
            frames,
            init,
            config,
            out,
        } => {
            let config = load_config(&config, verbose)?;
            let init = match init {
                Some(text) => parse_affine(&text)
                    .ok_or_else(|| Failure::Input(format!("--init: `{text}` is not lx,ly,theta,s,alpha,phi")))?,
                None => config
                    .detection
                    .track_init
                    .ok_or_else(|| Failure::Input("no initial state: pass --init or set tracker.init".into()))?,
            };
            let seq = load_frame_sequence(&frames)?;
            let track = track_sequence(&seq, &init, &config.effective_detection().tracker)?;
            write(&out, &track_to_csv(&track))
        }
        Command::Decompose {
            features,
            config,
            out_prefix,
        } => {
            let config = load_config(&config, verbose)?;
            let detection = config.effective_detection();
            let f = read_matrix_csv(&features)?;
            if f.ncols() == 0 || f.nrows() == 0 {
                return Err(Failure::Input(format!("{}: empty feature matrix", features.display())));
            }
            let points: Vec<Vec<f64>> = f.column_iter().map(|c| c.iter().copied().collect()).collect();
            let tree = build_index_tree(&points, detection.branching, detection.lsmd.seed);
            let parts = decompose(&f, &tree, &TreeWeights::uniform(&tree), &detection.lsmd)?;
            info!("{} iterations, converged {}", parts.iterations, parts.converged);
            write(&with_suffix(&out_prefix, "_L.csv"), &matrix_to_csv(&parts.low_rank))?;
            write(&with_suffix(&out_prefix, "_S.csv"), &matrix_to_csv(&parts.sparse))?;
            write(&with_suffix(&out_prefix, "_obj.csv"), &trace_to_csv(&parts.objective_trace))
        }
        Command::Synth { spec, seed, out_dir } => {
            let spec = match spec {
                Some(path) => read_synth_spec(&path)?,
                None => random_spec(64, 64, 100, 3, seed),
            };
            let (seq, truth) = synth_sequence(&spec, seed)?;
            write_frame_sequence(&out_dir, &seq)
                .map_err(|e| Failure::Internal(format!("cannot write frames to {}: {e}", out_dir.display())))?;
            write(&out_dir.join("truth.csv"), &truth_to_csv(&truth))
        }
        Command::Eval {
            events,
            truth,
            name,
            frames,
            append,
        } => {
            let detected = read_events_csv(&events)?;
            let truth: Vec<EventInterval> = read_truth_csv(&truth)?.iter().map(|t| t.interval()).collect();
            let correct = match_events(&detected, &truth)?;
            let total_frames = frames.unwrap_or_else(|| {
                detected.iter().chain(&truth).map(|e| e.end as i64 + 1).max().unwrap_or(0)
            });
            let row = ReportRow::new(name, total_frames, truth.len() as i64, correct as i64);
            match append {
                Some(path) => {
                    let mut rows = if path.exists() {
                        let text = fs::read_to_string(&path)
                            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
                        parse_report_rows(&text)?
                    } else {
                        Vec::new()
                    };
                    // re-evaluating a video replaces its row
                    match rows.iter_mut().find(|r| r.name == row.name) {
                        Some(existing) => *existing = row,
                        None => rows.push(row),
                    }
                    write(&path, &aggregate_report(&rows)?.to_csv())
                }
                None => {
                    print!("{}", aggregate_report(&[row])?.to_csv());
                    Ok(())
                }
            }
        }
    }
}
