use rayon::prelude::*;

use super::events::{detect_events, frame_activity_energy, normalize_scores, EventInterval, FrameScore, HysteresisParams};
use crate::error::{Error, Result};
use crate::geometry::AffineState;
use crate::ingest::{extract_proposals, feature_matrix, Frame, FrameSequence};
use crate::lsmd::{
    activity_scores, build_index_tree, clustering_points, decompose, motion_prior, LsmdParams, PriorScaling,
    TreeWeights, DEFAULT_BRANCHING,
};
use crate::tracker::{track_sequence, TrackerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub patch_size: usize,
    pub stride: usize,
    /// Decompose difference frames (otherwise raw frames).
    pub use_difference: bool,
    pub lsmd: LsmdParams,
    pub branching: usize,
    pub prior_scaling: PriorScaling,
    /// Thresholds in units of the sequence's peak combined score.
    pub hysteresis: HysteresisParams,
    /// Weight of tracker confidence in the combined score; 0 disables the tracker.
    pub kappa: f64,
    /// Run the decomposition every `lsmd_stride` frames and hold scores in between.
    pub lsmd_stride: usize,
    pub tracker: TrackerConfig,
    pub track_init: Option<AffineState>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            patch_size: 16,
            stride: 8,
            use_difference: true,
            lsmd: LsmdParams::default(),
            branching: DEFAULT_BRANCHING,
            prior_scaling: PriorScaling::default(),
            hysteresis: HysteresisParams::default(),
            kappa: 0.0,
            lsmd_stride: 1,
            tracker: TrackerConfig::default(),
            track_init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutput {
    /// One score per frame; frame 0 has no difference and scores 0.
    pub scores: Vec<FrameScore>,
    pub events: Vec<EventInterval>,
}

fn mix_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// LSMD activity energy of one frame.
///
/// `motion` is the difference frame driving the prior; `observed` is what gets decomposed.
pub fn frame_lsmd_energy(motion: &Frame, observed: &Frame, config: &DetectionConfig) -> Result<f64> {
    let proposals = extract_proposals(observed, config.patch_size, config.stride)?;
    let features = feature_matrix(&proposals)?;
    let (h, w) = observed.dims();
    let points = clustering_points(&features.data, &features.coords, h, w);
    let tree = build_index_tree(&points, config.branching, mix_seed(config.lsmd.seed, observed.index));
    let weights = TreeWeights::uniform(&tree);
    let parts = decompose(&features.data, &tree, &weights, &config.lsmd)?;
    let motion_proposals = if std::ptr::eq(motion, observed) {
        proposals
    } else {
        extract_proposals(motion, config.patch_size, config.stride)?
    };
    let prior = motion_prior(&motion_proposals, config.prior_scaling);
    frame_activity_energy(&activity_scores(&parts.sparse, &prior)?)
}

/// Difference → proposals → features → index tree → decomposition → scores → events.
pub fn run_detection(seq: &FrameSequence, config: &DetectionConfig) -> Result<DetectionOutput> {
    if seq.len() < 2 {
        return Err(Error::TooFewFrames(seq.len()));
    }
    if config.lsmd_stride == 0 {
        return Err(Error::BadShape("lsmd_stride must be at least 1".into()));
    }
    let n = seq.len();
    let keyframes: Vec<usize> = (1..n).step_by(config.lsmd_stride).collect();
    let energies = keyframes
        .par_iter()
        .map(|&t| {
            let diff = seq.difference(t)?;
            if config.use_difference {
                frame_lsmd_energy(&diff, &diff, config)
            } else {
                frame_lsmd_energy(&diff, &seq.frames[t], config)
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut lsmd_energy = vec![0.0; n];
    for t in 1..n {
        lsmd_energy[t] = energies[(t - 1) / config.lsmd_stride];
    }

    let mut tracker_conf = vec![0.0; n];
    if config.kappa > 0.0 {
        let init = config
            .track_init
            .ok_or_else(|| Error::BadShape("tracker mixing requires an initial state".into()))?;
        for r in track_sequence(seq, &init, &config.tracker)? {
            tracker_conf[r.frame] = r.confidence;
        }
    }

    let scores: Vec<FrameScore> = (0..n)
        .map(|t| FrameScore::new(t, lsmd_energy[t], tracker_conf[t], config.kappa))
        .collect();
    let events = detect_events(&normalize_scores(&scores), &config.hysteresis)?;
    Ok(DetectionOutput { scores, events })
}
