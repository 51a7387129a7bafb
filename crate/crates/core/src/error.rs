use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the detection pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("source not found: {0}")]
    MissingSource(PathBuf),
    #[error("malformed PGM {path}: {reason}")]
    MalformedPgm { path: PathBuf, reason: String },
    #[error("inconsistent frame dimensions: expected {expected:?}, got {got:?} in {path}")]
    InconsistentDimensions {
        path: PathBuf,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("need at least 2 frames, found {0}")]
    TooFewFrames(usize),
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("scale and aspect ratio must be positive (s = {s}, alpha = {alpha})")]
    NonPositiveScale { s: f64, alpha: f64 },
    #[error("patch size {patch} exceeds frame {height}x{width}")]
    PatchTooLarge {
        patch: usize,
        height: usize,
        width: usize,
    },
    #[error("proposal set is empty")]
    EmptyProposals,
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("threshold must be non-negative, got {0}")]
    NegativeTau(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty dictionary: {0}")]
    EmptyDictionary(&'static str),
    #[error("patch of {h}x{w} cannot be split into {block}x{block} blocks")]
    BadBlocking { h: usize, w: usize, block: usize },
    #[error("particle likelihoods have not been evaluated")]
    LikelihoodsUnset,
    #[error("initial state ({lx}, {ly}) lies outside the first frame")]
    InitOutOfBounds { lx: f64, ly: f64 },
    #[error("no activity scores")]
    EmptyScores,
    #[error("bad thresholds: tau_off {tau_off} > tau_on {tau_on}")]
    BadThresholds { tau_on: f64, tau_off: f64 },
    #[error("intervals must be sorted and non-overlapping")]
    UnsortedInput,
    #[error("negative count in report row {0}")]
    NegativeCounts(String),
    #[error("event {start}..={end} outside [0, {n_frames})")]
    EventOutOfRange {
        start: usize,
        end: usize,
        n_frames: usize,
    },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: cannot parse `{value}` as {expected}")]
    TypeError {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("config key `{key}`: {reason}")]
    RangeError { key: String, reason: String },
    #[error("parse error at {path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
