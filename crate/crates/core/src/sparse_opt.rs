//! Non-negative ℓ1-regularised least squares and proximal building blocks.
//!
//! The coding problem is `min ||t - X g||² + lambda1 * ||g||₁  s.t. g >= 0`
//! (no ½ factor), solved by cyclic coordinate descent on the Gram matrix.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA1: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub lambda1: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda1: DEFAULT_LAMBDA1,
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

impl SolverParams {
    pub fn with_lambda(lambda1: f64) -> Self {
        Self {
            lambda1,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return Err(Error::BadShape(format!("lambda1 = {}", self.lambda1)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::BadShape(format!("tol = {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub gamma: DVector<f64>,
    pub objective: f64,
    /// Squared reconstruction error `||t - X gamma||²`.
    pub residual: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// A dictionary with its Gram matrix cached, for coding many targets against the same atoms.
#[derive(Debug, Clone)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl Dictionary {
    pub fn new(atoms: DMatrix<f64>) -> Result<Self> {
        if atoms.nrows() == 0 || atoms.ncols() == 0 {
            return Err(Error::BadShape(format!("dictionary {:?}", atoms.shape())));
        }
        if !atoms.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let gram = atoms.tr_mul(&atoms);
        Ok(Self { atoms, gram })
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn len(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.ncols() == 0
    }

    pub fn code(&self, t: &[f64], params: &SolverParams) -> Result<SparseCode> {
        self.solve(t, params, None)
    }

    fn solve(&self, t: &[f64], params: &SolverParams, mut trace: Option<&mut Vec<f64>>) -> Result<SparseCode> {
        params.validate()?;
        if t.len() != self.dim() {
            return Err(Error::BadShape(format!(
                "target has length {}, dictionary rows {}",
                t.len(),
                self.dim()
            )));
        }
        if !t.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let n = self.len();
        let t = DVector::from_column_slice(t);
        let b = self.atoms.tr_mul(&t);
        let tt = t.norm_squared();
        let lambda = params.lambda1;
        let g = &self.gram;

        let mut gamma = DVector::<f64>::zeros(n);
        // running value of G * gamma
        let mut g_gamma = DVector::<f64>::zeros(n);
        let objective = |gamma: &DVector<f64>, g_gamma: &DVector<f64>| {
            let fit = (tt - 2.0 * b.dot(gamma) + gamma.dot(g_gamma)).max(0.0);
            (fit, fit + lambda * gamma.sum())
        };
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(objective(&gamma, &g_gamma).1);
        }

        let kkt_of = |gamma: &DVector<f64>, g_gamma: &DVector<f64>| {
            (0..n)
                .map(|k| {
                    let grad = 2.0 * (g_gamma[k] - b[k]) + lambda;
                    if gamma[k] == 0.0 {
                        grad.min(0.0).abs()
                    } else {
                        grad.abs()
                    }
                })
                .fold(0.0, f64::max)
        };

        let mut iterations = 0;
        let mut support: Vec<usize> = Vec::new();
        while iterations < params.max_iter {
            iterations += 1;
            let mut max_change: f64 = 0.0;
            for k in 0..n {
                let gkk = g[(k, k)];
                let old = gamma[k];
                let new = if gkk <= 0.0 {
                    0.0
                } else {
                    // x_k' (t - X gamma_{-k}) = b_k - (G gamma)_k + G_kk gamma_k
                    let corr = b[k] - g_gamma[k] + gkk * old;
                    ((2.0 * corr - lambda) / (2.0 * gkk)).max(0.0)
                };
                let delta = new - old;
                if delta != 0.0 {
                    gamma[k] = new;
                    g_gamma.axpy(delta, &g.column(k), 1.0);
                    max_change = max_change.max(delta.abs());
                }
            }
            // once the support settles, solve the reduced system on it exactly
            let current: Vec<usize> = (0..n).filter(|&k| gamma[k] > 0.0).collect();
            let mut polished = false;
            if current == support && max_change >= params.tol {
                if let Some(exact) = self.polish(&current, &b, lambda) {
                    let exact_g = g * &exact;
                    if kkt_of(&exact, &exact_g) <= kkt_of(&gamma, &g_gamma) {
                        gamma = exact;
                        g_gamma = exact_g;
                        polished = true;
                    }
                }
            }
            support = current;
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(objective(&gamma, &g_gamma).1);
            }
            if max_change < params.tol || (polished && kkt_of(&gamma, &g_gamma) < params.tol) {
                break;
            }
        }

        if kkt_of(&gamma, &g_gamma) > params.tol {
            if let Some(exact) = self.active_set(&b, lambda) {
                let exact_g = g * &exact;
                if kkt_of(&exact, &exact_g) < kkt_of(&gamma, &g_gamma) {
                    gamma = exact;
                    g_gamma = exact_g;
                }
            }
        }

        let (residual, objective) = objective(&gamma, &g_gamma);
        let kkt = kkt_of(&gamma, &g_gamma);
        Ok(SparseCode {
            gamma,
            objective,
            residual,
            iterations,
            kkt_residual: kkt,
        })
    }

    /// Lawson-Hanson active set on the equivalent quadratic program. Used
    /// when coordinate descent stalls on ill-conditioned dictionaries.
    fn active_set(&self, b: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
        let n = self.len();
        let c = b.map(|v| v - lambda / 2.0);
        let mut gamma = DVector::zeros(n);
        let mut passive = vec![false; n];
        for _ in 0..3 * n + 10 {
            let w = &c - &self.gram * &gamma;
            let scale = 1e-12 * (1.0 + c.amax());
            let pick = (0..n)
                .filter(|&k| !passive[k] && w[k] > scale)
                .max_by(|&i, &j| w[i].total_cmp(&w[j]));
            let Some(k) = pick else {
                return Some(gamma);
            };
            passive[k] = true;
            loop {
                let support: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
                let m = support.len();
                let gram = DMatrix::from_fn(m, m, |i, j| self.gram[(support[i], support[j])]);
                let rhs = DVector::from_fn(m, |i, _| c[support[i]]);
                let sol = gram.lu().solve(&rhs)?;
                if sol.iter().all(|&v| v > 0.0) {
                    for (i, &k) in support.iter().enumerate() {
                        gamma[k] = sol[i];
                    }
                    break;
                }
                // step toward the unconstrained solution until a coordinate hits zero
                let mut alpha = 1.0f64;
                for (i, &k) in support.iter().enumerate() {
                    if sol[i] <= 0.0 {
                        let denom = gamma[k] - sol[i];
                        if denom > 0.0 {
                            alpha = alpha.min(gamma[k] / denom);
                        }
                    }
                }
                for (i, &k) in support.iter().enumerate() {
                    gamma[k] += alpha * (sol[i] - gamma[k]);
                    if gamma[k] <= 1e-15 {
                        gamma[k] = 0.0;
                        passive[k] = false;
                    }
                }
                if support.iter().all(|&k| passive[k]) {
                    return None;
                }
            }
        }
        None
    }

    /// Stationary point restricted to `support`, if it is strictly positive there.
    fn polish(&self, support: &[usize], b: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
        if support.is_empty() {
            return None;
        }
        let m = support.len();
        let gram = DMatrix::from_fn(m, m, |i, j| self.gram[(support[i], support[j])]);
        let rhs = DVector::from_fn(m, |i, _| b[support[i]] - lambda / 2.0);
        let sol = gram.cholesky()?.solve(&rhs);
        if sol.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return None;
        }
        let mut gamma = DVector::zeros(self.len());
        for (i, &k) in support.iter().enumerate() {
            gamma[k] = sol[i];
        }
        Some(gamma)
    }
}

/// Solves `min ||t - X g||² + lambda1 ||g||₁` subject to `g >= 0`.
pub fn nn_lasso(x: &DMatrix<f64>, t: &[f64], params: &SolverParams) -> Result<SparseCode> {
    Dictionary::new(x.clone())?.code(t, params)
}

/// Like [`nn_lasso`], also returning the objective before the first sweep and after each sweep.
pub fn nn_lasso_with_trace(
    x: &DMatrix<f64>,
    t: &[f64],
    params: &SolverParams,
) -> Result<(SparseCode, Vec<f64>)> {
    let mut trace = Vec::new();
    let code = Dictionary::new(x.clone())?.solve(t, params, Some(&mut trace))?;
    Ok((code, trace))
}

/// Largest violation of the optimality conditions at `gamma`.
pub fn kkt_residual(x: &DMatrix<f64>, t: &[f64], lambda1: f64, gamma: &[f64]) -> Result<f64> {
    if t.len() != x.nrows() || gamma.len() != x.ncols() {
        return Err(Error::BadShape(format!(
            "X {:?}, t {}, gamma {}",
            x.shape(),
            t.len(),
            gamma.len()
        )));
    }
    if gamma.iter().any(|&g| g < 0.0) {
        return Err(Error::BadShape("gamma has negative entries".into()));
    }
    let gv = DVector::from_column_slice(gamma);
    let r = DVector::from_column_slice(t) - x * &gv;
    let xr = x.tr_mul(&r);
    Ok((0..x.ncols())
        .map(|k| {
            let g = -2.0 * xr[k] + lambda1;
            if gamma[k] == 0.0 {
                g.min(0.0).abs()
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max))
}

pub fn soft_threshold(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::NegativeTau(tau));
    }
    Ok(v.iter().map(|&x| soft_threshold_scalar(x, tau)).collect())
}

#[inline]
pub fn soft_threshold_scalar(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Codes every template against the same sample dictionary; output order follows input order.
pub fn batch_code_templates(
    templates: &[Vec<f64>],
    x: &DMatrix<f64>,
    params: &SolverParams,
) -> Result<Vec<SparseCode>> {
    let dict = Dictionary::new(x.clone())?;
    if let Some(bad) = templates.iter().find(|t| t.len() != dict.dim()) {
        return Err(Error::BadShape(format!(
            "template of length {} against {} rows",
            bad.len(),
            dict.dim()
        )));
    }
    templates.par_iter().map(|t| dict.code(t, params)).collect()
}
