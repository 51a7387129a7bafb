//! Collaborative appearance model: a discriminative classifier over holistic
//! templates and a generative model over local blocks.

use nalgebra::DMatrix;

use super::particles::TrackResult;
use crate::error::{Error, Result};
use crate::geometry::AffineState;
use crate::ingest::{normalize_in_place, warp_patch, Frame, Patch};
use crate::sparse_opt::{Dictionary, SolverParams};

pub const BLOCK_SIZE: usize = 8;
const MAX_DISCRIMINATIVE: f64 = 1e6;
/// Offsets (in footprint widths/heights) of the background patches around the target.
const RING: [(f64, f64); 4] = [(1.5, 0.0), (0.0, 1.5), (-1.5, 0.0), (0.0, -1.5)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationParams {
    pub solver: SolverParams,
    /// Temperature of the discriminative confidence.
    pub sigma_c: f64,
    /// Squared residual above which a local block counts as occluded.
    pub eps_occ: f64,
}

impl Default for ObservationParams {
    fn default() -> Self {
        Self {
            solver: SolverParams::default(),
            sigma_c: 0.1,
            eps_occ: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdatePolicy {
    pub tau_update: f64,
    pub max_occlusion: f64,
}

impl Default for UpdatePolicy {
    fn default() -> Self {
        Self {
            tau_update: 0.3,
            max_occlusion: 0.3,
        }
    }
}

/// Holistic templates (slot 0 is the first-frame template), background
/// negatives, and the dictionaries derived from them.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    holistic: Vec<Patch>,
    negatives: Vec<Patch>,
    /// Frame stamp of each holistic slot.
    ages: Vec<usize>,
    positive_dict: Dictionary,
    negative_dict: Dictionary,
    /// One dictionary per block position; atom `j` is block `p` of template `j`.
    local_dicts: Vec<Dictionary>,
    size: (usize, usize),
}

/// Block `p` of a patch as `[pixels (row-major), 1]` scaled to unit norm.
///
/// The constant entry keeps an empty block distinguishable from a textured one.
fn block_vector(patch: &Patch, p: usize) -> Vec<f64> {
    let per_row = patch.pixels.ncols() / BLOCK_SIZE;
    let (r0, c0) = ((p / per_row) * BLOCK_SIZE, (p % per_row) * BLOCK_SIZE);
    let mut v = Vec::with_capacity(BLOCK_SIZE * BLOCK_SIZE + 1);
    for r in 0..BLOCK_SIZE {
        for c in 0..BLOCK_SIZE {
            v.push(patch.pixels[(r0 + r, c0 + c)]);
        }
    }
    v.push(1.0);
    normalize_in_place(&mut v);
    v
}

fn columns(vectors: &[Vec<f64>]) -> DMatrix<f64> {
    let d = vectors[0].len();
    DMatrix::from_fn(d, vectors.len(), |r, c| vectors[c][r])
}

impl TemplateSet {
    pub fn new(holistic: Vec<Patch>, negatives: Vec<Patch>) -> Result<Self> {
        let first = holistic.first().ok_or(Error::EmptyDictionary("holistic templates"))?;
        if negatives.is_empty() {
            return Err(Error::EmptyDictionary("negative templates"));
        }
        let size = first.dims();
        if size.0 % BLOCK_SIZE != 0 || size.1 % BLOCK_SIZE != 0 {
            return Err(Error::BadBlocking {
                h: size.0,
                w: size.1,
                block: BLOCK_SIZE,
            });
        }
        if holistic.iter().chain(&negatives).any(|p| p.dims() != size) {
            return Err(Error::ShapeMismatch("templates differ in size".into()));
        }
        let ages = vec![0; holistic.len()];
        let mut set = Self {
            positive_dict: Dictionary::new(DMatrix::zeros(1, 1))?,
            negative_dict: Dictionary::new(DMatrix::zeros(1, 1))?,
            local_dicts: Vec::new(),
            holistic,
            negatives,
            ages,
            size,
        };
        set.rebuild()?;
        Ok(set)
    }

    /// `m` copies of the patch at `state` plus background patches around it.
    pub fn initialize(frame: &Frame, state: &AffineState, m: usize, size: (usize, usize)) -> Result<Self> {
        let first = warp_patch(frame, state, size.0, size.1)?;
        let negatives = ring_patches(frame, state, size)?;
        Self::new(vec![first; m.max(1)], negatives)
    }

    fn rebuild(&mut self) -> Result<()> {
        let pos: Vec<Vec<f64>> = self.holistic.iter().map(Patch::normalized_vec).collect();
        let neg: Vec<Vec<f64>> = self.negatives.iter().map(Patch::normalized_vec).collect();
        self.positive_dict = Dictionary::new(columns(&pos))?;
        self.negative_dict = Dictionary::new(columns(&neg))?;
        self.local_dicts = (0..self.n_blocks())
            .map(|p| {
                let atoms: Vec<Vec<f64>> = self.holistic.iter().map(|t| block_vector(t, p)).collect();
                Dictionary::new(columns(&atoms))
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn holistic(&self) -> &[Patch] {
        &self.holistic
    }

    pub fn negatives(&self) -> &[Patch] {
        &self.negatives
    }

    pub fn ages(&self) -> &[usize] {
        &self.ages
    }

    pub fn size(&self) -> (usize, usize) {
        self.size
    }

    pub fn n_blocks(&self) -> usize {
        (self.size.0 / BLOCK_SIZE) * (self.size.1 / BLOCK_SIZE)
    }

    /// Positive and negative holistic dictionaries (unit-norm columns).
    pub fn holistic_dictionaries(&self) -> (&Dictionary, &Dictionary) {
        (&self.positive_dict, &self.negative_dict)
    }

    /// Local dictionaries, one `65 x m` matrix per block position.
    pub fn local_dict(&self) -> &[Dictionary] {
        &self.local_dicts
    }

    fn check_candidate(&self, candidate: &Patch) -> Result<()> {
        let (h, w) = candidate.dims();
        if candidate.dims() != self.size {
            return Err(Error::BadBlocking {
                h,
                w,
                block: BLOCK_SIZE,
            });
        }
        Ok(())
    }
}

fn ring_patches(frame: &Frame, state: &AffineState, size: (usize, usize)) -> Result<Vec<Patch>> {
    let (w, h) = state.extent();
    RING.iter()
        .map(|&(fx, fy)| {
            let mut s = *state;
            s.lx += fx * w;
            s.ly += fy * h;
            warp_patch(frame, &s, size.0, size.1)
        })
        .collect()
}

/// `exp(-(eps_pos - eps_neg) / sigma_c)` from the squared coding residuals of the
/// candidate over the positive and negative holistic dictionaries, clamped to `[0, 1e6]`.
pub fn discriminative_confidence(candidate: &Patch, templates: &TemplateSet, params: &ObservationParams) -> Result<f64> {
    templates.check_candidate(candidate)?;
    let y = candidate.normalized_vec();
    let eps_pos = templates.positive_dict.code(&y, &params.solver)?.residual;
    let eps_neg = templates.negative_dict.code(&y, &params.solver)?.residual;
    Ok(discriminative_from_residuals(eps_pos, eps_neg, params.sigma_c))
}

pub fn discriminative_from_residuals(eps_pos: f64, eps_neg: f64, sigma_c: f64) -> f64 {
    (-(eps_pos - eps_neg) / sigma_c).exp().clamp(0.0, MAX_DISCRIMINATIVE)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeScore {
    pub confidence: f64,
    /// Per-block occlusion flags, row-major over block positions.
    pub mask: Vec<bool>,
    pub residuals: Vec<f64>,
}

impl GenerativeScore {
    pub fn occlusion_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }
}

/// Codes every block of the candidate over its position's local dictionary.
pub fn generative_confidence(
    candidate: &Patch,
    templates: &TemplateSet,
    eps_occ: f64,
    solver: &SolverParams,
) -> Result<GenerativeScore> {
    templates.check_candidate(candidate)?;
    let n = templates.n_blocks();
    let mut mask = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut sum = 0.0;
    for (p, dict) in templates.local_dicts.iter().enumerate() {
        let r = dict.code(&block_vector(candidate, p), solver)?.residual;
        let occluded = r > eps_occ;
        if !occluded {
            sum += 1.0 - r / eps_occ;
        }
        mask.push(occluded);
        residuals.push(r);
    }
    Ok(GenerativeScore {
        confidence: sum / n as f64,
        mask,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub likelihood: f64,
    pub discriminative: f64,
    pub generative: GenerativeScore,
}

/// `H_d * H_g`.
pub fn observation_likelihood(candidate: &Patch, templates: &TemplateSet, params: &ObservationParams) -> Result<Observation> {
    let generative = generative_confidence(candidate, templates, params.eps_occ, &params.solver)?;
    let discriminative = discriminative_confidence(candidate, templates, params)?;
    Ok(Observation {
        likelihood: discriminative * generative.confidence,
        discriminative,
        generative,
    })
}

/// Replaces the oldest non-anchor template with `result_patch` and refreshes the
/// background patches, unless the result is unreliable or too occluded.
pub fn update_templates(
    templates: &TemplateSet,
    result: &TrackResult,
    result_patch: &Patch,
    frame: &Frame,
    policy: &UpdatePolicy,
) -> Result<TemplateSet> {
    let accept = !result.is_lost()
        && result.confidence >= policy.tau_update
        && result.occlusion_fraction <= policy.max_occlusion
        && templates.holistic.len() > 1;
    if !accept {
        return Ok(templates.clone());
    }
    templates.check_candidate(result_patch)?;
    let mut next = templates.clone();
    let slot = (1..next.holistic.len())
        .min_by_key(|&i| (next.ages[i], i))
        .expect("at least two slots");
    next.holistic[slot] = result_patch.clone();
    next.ages[slot] = result.frame;
    next.negatives = ring_patches(frame, &result.state, next.size)?;
    next.rebuild()?;
    Ok(next)
}
