use nalgebra::DMatrix;

use super::prox::{prox_tree_norm, svt, tree_norm, TreeWeights};
use super::tree::IndexTree;
use crate::error::{Error, Result};
use crate::ingest::ProposalSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsmdParams {
    /// Nuclear-norm weight.
    pub mu_l: f64,
    /// Tree-norm weight.
    pub mu_s: f64,
    /// Elementwise ℓ1 weight on S, relative to `mu_s`.
    pub lambda_l1: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for LsmdParams {
    fn default() -> Self {
        Self {
            mu_l: 0.4,
            mu_s: 0.1,
            lambda_l1: 0.05,
            max_iter: 200,
            rel_tol: 1e-6,
            seed: 0,
        }
    }
}

impl LsmdParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu_l > 0.0
            && self.mu_s > 0.0
            && self.lambda_l1 >= 0.0
            && self.rel_tol > 0.0
            && [self.mu_l, self.mu_s, self.lambda_l1, self.rel_tol]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::BadShape(format!("invalid LSMD parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub low_rank: DMatrix<f64>,
    pub sparse: DMatrix<f64>,
    /// Objective at the starting point followed by one value per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Objective `½||F - L - S||² + mu_L ||L||_* + mu_S (Ω(S) + lambda_l1 ||S||₁)`.
pub fn lsmd_objective(
    f: &DMatrix<f64>,
    l: &DMatrix<f64>,
    s: &DMatrix<f64>,
    tree: &IndexTree,
    weights: &TreeWeights,
    params: &LsmdParams,
) -> Result<f64> {
    let nuclear = super::prox::nuclear_norm(l);
    sparse_objective(f, l, s, nuclear, tree, weights, params)
}

fn sparse_objective(
    f: &DMatrix<f64>,
    l: &DMatrix<f64>,
    s: &DMatrix<f64>,
    nuclear: f64,
    tree: &IndexTree,
    weights: &TreeWeights,
    params: &LsmdParams,
) -> Result<f64> {
    let fit = 0.5 * (f - l - s).norm_squared();
    let l1: f64 = s.iter().map(|v| v.abs()).sum();
    Ok(fit
        + params.mu_l * nuclear
        + params.mu_s * (tree_norm(s, tree, weights)? + params.lambda_l1 * l1))
}

/// Splits `F` into a low-rank part and a tree-structured sparse part by exact
/// alternating minimisation over `L` and `S`.
pub fn decompose(
    f: &DMatrix<f64>,
    tree: &IndexTree,
    weights: &TreeWeights,
    params: &LsmdParams,
) -> Result<Decomposition> {
    params.validate()?;
    if f.ncols() != tree.n_columns() {
        return Err(Error::ShapeMismatch(format!(
            "feature matrix has {} columns, tree covers {}",
            f.ncols(),
            tree.n_columns()
        )));
    }
    let mut l = DMatrix::zeros(f.nrows(), f.ncols());
    let mut s = DMatrix::zeros(f.nrows(), f.ncols());
    let mut trace = vec![sparse_objective(f, &l, &s, 0.0, tree, weights, params)?];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let (next_l, nuclear) = svt(&(f - &s), params.mu_l)?;
        l = next_l;
        s = prox_tree_norm(&(f - &l), tree, weights, params.mu_s, params.lambda_l1)?;
        let obj = sparse_objective(f, &l, &s, nuclear, tree, weights, params)?;
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(obj);
        let scale = prev.abs().max(f64::MIN_POSITIVE);
        if (prev - obj).abs() / scale < params.rel_tol || obj == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(Decomposition {
        low_rank: l,
        sparse: s,
        objective_trace: trace,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorScaling {
    /// Mean difference intensity as is (already in `[0, 1]`).
    #[default]
    Absolute,
    /// Divided by the frame's largest proposal mean.
    FrameMax,
}

/// Motion-magnitude prior: mean intensity of each proposal of a difference frame.
/// An all-zero prior maps to uniform 1.
pub fn motion_prior(proposals: &ProposalSet, scaling: PriorScaling) -> Vec<f64> {
    let means: Vec<f64> = proposals
        .patches
        .iter()
        .map(|p| p.pixels.mean())
        .collect();
    let max = means.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![1.0; means.len()];
    }
    match scaling {
        PriorScaling::Absolute => means.into_iter().map(|m| m.clamp(0.0, 1.0)).collect(),
        PriorScaling::FrameMax => means.into_iter().map(|m| m / max).collect(),
    }
}

/// `score_j = prior_j * ||S[:, j]||₂`.
pub fn activity_scores(s: &DMatrix<f64>, prior: &[f64]) -> Result<Vec<f64>> {
    if s.ncols() != prior.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} sparse columns, {} prior weights",
            s.ncols(),
            prior.len()
        )));
    }
    Ok(s.column_iter()
        .zip(prior)
        .map(|(col, p)| p * col.norm())
        .collect())
}
