//! Action-activity detection in video from adjacent frame differences.
//!
//! The pipeline decomposes per-frame proposal features into a low-rank part and
//! a tree-structured sparse part ([`lsmd`]), optionally combined with a
//! particle-filter tracker driven by a sparse collaborative appearance model
//! ([`tracker`]). Detected activity intervals are matched against ground truth
//! and summarised in a per-video results table ([`detector`]).

pub mod config;
pub mod detector;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod io;
pub mod lsmd;
pub mod sparse_opt;
pub mod tracker;

pub use config::Config;
pub use error::{Error, Result};
pub use geometry::AffineState;
