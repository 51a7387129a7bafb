//! Activity intervals from per-frame decomposition energy, ground-truth matching,
//! results tables and synthetic test scenes.

mod events;
mod pipeline;
mod report;
mod synth;

pub use events::{
    detect_events, frame_activity_energy, intervals_match, match_events, normalize_scores, EventInterval, FrameScore,
    HysteresisParams,
};
pub use pipeline::{frame_lsmd_energy, run_detection, DetectionConfig, DetectionOutput};
pub use report::{aggregate_report, parse_report_rows, DetectionReport, ReportRow, REPORT_HEADER};
pub use synth::{random_spec, synth_sequence, EventKind, SynthSpec, TruthEvent, NOISE_AMPLITUDE};
