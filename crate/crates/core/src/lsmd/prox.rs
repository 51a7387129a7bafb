//! Proximal operators for the low-rank and tree-structured sparse terms.

use nalgebra::DMatrix;

use super::tree::IndexTree;
use crate::error::{Error, Result};
use crate::sparse_opt::soft_threshold_scalar;

/// Positive weight per tree node, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeWeights {
    pub w: Vec<f64>,
}

impl TreeWeights {
    pub fn uniform(tree: &IndexTree) -> Self {
        Self {
            w: vec![1.0; tree.nodes.len()],
        }
    }

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::BadShape("tree weights must be positive".into()));
        }
        Ok(Self { w })
    }
}

fn check_shapes(s: &DMatrix<f64>, tree: &IndexTree, weights: &TreeWeights) -> Result<()> {
    if s.ncols() != tree.n_columns() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns, tree covers {}",
            s.ncols(),
            tree.n_columns()
        )));
    }
    if weights.w.len() != tree.nodes.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} nodes",
            weights.w.len(),
            tree.nodes.len()
        )));
    }
    Ok(())
}

fn group_norm(s: &DMatrix<f64>, cols: &[usize]) -> f64 {
    cols.iter()
        .map(|&c| s.column(c).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Weighted sum over tree nodes of the Frobenius norm of each node's columns.
pub fn tree_norm(s: &DMatrix<f64>, tree: &IndexTree, weights: &TreeWeights) -> Result<f64> {
    check_shapes(s, tree, weights)?;
    Ok(tree
        .nodes
        .iter()
        .map(|n| weights.w[n.id] * group_norm(s, &n.members))
        .sum())
}

/// Proximal operator of `tau * (tree_norm + lambda_l1 * ||.||₁)`.
///
/// Elementwise soft-thresholding first, then group shrinkage from the leaves up to
/// the root. For nested groups this composition is the exact proximal map.
pub fn prox_tree_norm(
    s: &DMatrix<f64>,
    tree: &IndexTree,
    weights: &TreeWeights,
    tau: f64,
    lambda_l1: f64,
) -> Result<DMatrix<f64>> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::NegativeTau(tau));
    }
    if lambda_l1 < 0.0 || lambda_l1.is_nan() {
        return Err(Error::NegativeTau(lambda_l1));
    }
    check_shapes(s, tree, weights)?;
    let thr = tau * lambda_l1;
    let mut z = s.map(|v| soft_threshold_scalar(v, thr));
    for node in tree.bottom_up() {
        let norm = group_norm(&z, &node.members);
        if norm == 0.0 {
            continue;
        }
        let scale = (1.0 - tau * weights.w[node.id] / norm).max(0.0);
        if scale == 1.0 {
            continue;
        }
        for &c in &node.members {
            z.column_mut(c).scale_mut(scale);
        }
    }
    Ok(z)
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn svd_failed<E: std::fmt::Debug>(e: E) -> Error {
    Error::BadShape(format!("singular value decomposition failed: {e:?}"))
}

/// Singular value thresholding. Also returns the nuclear norm of the result.
pub fn svt(l: &DMatrix<f64>, tau: f64) -> Result<(DMatrix<f64>, f64)> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::NegativeTau(tau));
    }
    if !l.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if l.is_empty() {
        return Ok((l.clone(), 0.0));
    }
    // nalgebra's SVD loses accuracy on rank-deficient wide inputs; faer's does not
    let svd = to_faer(l).thin_svd().map_err(svd_failed)?;
    let (u, sv, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut z = DMatrix::zeros(l.nrows(), l.ncols());
    let mut nuclear = 0.0;
    for k in 0..sv.nrows() {
        let shrunk = (sv[k] - tau).max(0.0);
        if shrunk == 0.0 {
            continue;
        }
        nuclear += shrunk;
        for j in 0..l.ncols() {
            let vj = shrunk * v[(j, k)];
            for i in 0..l.nrows() {
                z[(i, j)] += u[(i, k)] * vj;
            }
        }
    }
    Ok((z, nuclear))
}

pub fn prox_nuclear(l: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    svt(l, tau).map(|(z, _)| z)
}

/// Sum of singular values; NaN if the decomposition fails.
pub fn nuclear_norm(l: &DMatrix<f64>) -> f64 {
    if l.is_empty() {
        return 0.0;
    }
    to_faer(l).singular_values().map_or(f64::NAN, |s| s.iter().sum())
}
