use rayon::prelude::*;

use super::appearance::{observation_likelihood, update_templates, ObservationParams, TemplateSet, UpdatePolicy};
use super::particles::{map_estimate, propose_particles, MotionModelParams, TrackResult};
use crate::error::{Error, Result};
use crate::geometry::{AffineState, CANONICAL_SIZE};
use crate::ingest::{warp_patch, Frame, FrameSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub n_particles: usize,
    pub motion: MotionModelParams,
    pub observation: ObservationParams,
    pub update: UpdatePolicy,
    pub n_templates: usize,
    pub template_size: usize,
    /// Observe difference frames instead of raw frames.
    pub use_difference: bool,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            n_particles: 600,
            motion: MotionModelParams::default(),
            observation: ObservationParams::default(),
            update: UpdatePolicy::default(),
            n_templates: 10,
            template_size: CANONICAL_SIZE,
            use_difference: false,
            seed: 0,
        }
    }
}

/// Per-frame generator seed.
pub(crate) fn frame_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D)
        .wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn observed(seq: &FrameSequence, t: usize, use_difference: bool) -> Result<Frame> {
    if use_difference {
        // frame 0 has no predecessor; it borrows the first difference
        seq.difference(t.max(1))
    } else {
        Ok(seq.frames[t].clone())
    }
}

/// One predict / weight / select / update step.
pub fn track_step(
    frame: &Frame,
    prev: &AffineState,
    templates: &TemplateSet,
    config: &TrackerConfig,
) -> Result<(TrackResult, TemplateSet)> {
    let size = config.template_size;
    let mut particles = propose_particles(prev, &config.motion, config.n_particles, frame_seed(config.seed, frame.index));
    let observations = particles
        .states
        .par_iter()
        .map(|s| {
            let patch = warp_patch(frame, s, size, size)?;
            let o = observation_likelihood(&patch, templates, &config.observation)?;
            Ok((o.likelihood, o.generative.occlusion_fraction()))
        })
        .collect::<Result<Vec<_>>>()?;
    particles.likelihoods = Some(observations.iter().map(|o| o.0).collect());
    let mut result = map_estimate(&particles, frame.index)?;
    result.occlusion_fraction = match result.particle {
        Some(i) => observations[i].1,
        None => 1.0,
    };
    let patch = warp_patch(frame, &result.state, size, size)?;
    let next = update_templates(templates, &result, &patch, frame, &config.update)?;
    Ok((result, next))
}

/// Tracks a single target from `init` on frame 0 through the sequence; one result per frame `t >= 1`.
pub fn track_sequence(seq: &FrameSequence, init: &AffineState, config: &TrackerConfig) -> Result<Vec<TrackResult>> {
    init.validate()?;
    let (h, w) = seq.dims();
    if !(init.lx >= 0.0 && init.lx < w as f64 && init.ly >= 0.0 && init.ly < h as f64) {
        return Err(Error::InitOutOfBounds {
            lx: init.lx,
            ly: init.ly,
        });
    }
    if seq.len() < 2 {
        return Err(Error::TooFewFrames(seq.len()));
    }
    if config.n_particles == 0 {
        return Err(Error::BadShape("n_particles must be at least 1".into()));
    }
    let size = config.template_size;
    let first = observed(seq, 0, config.use_difference)?;
    let mut templates = TemplateSet::initialize(&first, init, config.n_templates, (size, size))?;
    let mut state = *init;
    let mut results = Vec::with_capacity(seq.len() - 1);
    for t in 1..seq.len() {
        let frame = observed(seq, t, config.use_difference)?;
        let (result, next) = track_step(&frame, &state, &templates, config)?;
        state = result.state;
        templates = next;
        results.push(result);
    }
    Ok(results)
}
