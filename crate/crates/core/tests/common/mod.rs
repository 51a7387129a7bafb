//! Independent reference implementations used by the integration and acceptance tests.
#![allow(dead_code)]

use motion_lsmd::lsmd::{build_index_tree, IndexTree};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn lasso_objective(x: &DMatrix<f64>, t: &[f64], lambda: f64, gamma: &[f64]) -> f64 {
    let g = DVector::from_column_slice(gamma);
    let r = DVector::from_column_slice(t) - x * g;
    r.norm_squared() + lambda * gamma.iter().sum::<f64>()
}

/// Enumerates every support set, solves its stationarity system and keeps the best
/// non-negative solution.
pub fn active_set_oracle(x: &DMatrix<f64>, t: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = x.ncols();
    let tv = DVector::from_column_slice(t);
    let mut best = (vec![0.0; n], lasso_objective(x, t, lambda, &vec![0.0; n]));
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&k| mask & (1 << k) != 0).collect();
        let xa = DMatrix::from_fn(x.nrows(), support.len(), |r, c| x[(r, support[c])]);
        let gram = xa.transpose() * &xa;
        let rhs = xa.transpose() * &tv - DVector::from_element(support.len(), lambda / 2.0);
        let Some(sol) = gram.clone().lu().solve(&rhs) else { continue };
        if (&gram * &sol - &rhs).norm() > 1e-9 * (1.0 + rhs.norm()) {
            continue;
        }
        if sol.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut gamma = vec![0.0; n];
        for (i, &k) in support.iter().enumerate() {
            gamma[k] = sol[i];
        }
        let obj = lasso_objective(x, t, lambda, &gamma);
        if obj < best.1 {
            best = (gamma, obj);
        }
    }
    best
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix: (eigenvalues, eigenvectors as columns).
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Singular values and the `U Vᵀ` factor of the nonzero part, via the eigenvectors of `LᵀL`.
pub fn polar_factor(l: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (vals, v) = jacobi_eigen(&(l.transpose() * l));
    let mut sv = Vec::new();
    let mut uvt = DMatrix::zeros(l.nrows(), l.ncols());
    let scale = vals.iter().cloned().fold(0.0, f64::max).sqrt().max(1.0);
    for (i, &e) in vals.iter().enumerate() {
        let sigma = e.max(0.0).sqrt();
        sv.push(sigma);
        if sigma > 1e-10 * scale {
            let vi = v.column(i);
            let ui = l * vi / sigma;
            uvt += ui * vi.transpose();
        }
    }
    (sv, uvt)
}

pub fn nuclear_objective(z: &DMatrix<f64>, l: &DMatrix<f64>, tau: f64) -> f64 {
    let (sv, _) = polar_factor(l);
    0.5 * (l - z).norm_squared() + tau * sv.iter().sum::<f64>()
}

/// Subgradient descent on `½||L − Z||² + tau ||L||_*` with step `2 / (k + 2)`;
/// returns the best iterate seen.
pub fn nuclear_prox_oracle(z: &DMatrix<f64>, tau: f64, iters: usize) -> DMatrix<f64> {
    let mut l = z.clone();
    let mut best = (nuclear_objective(z, &l, tau), l.clone());
    for k in 0..iters {
        let (_, uvt) = polar_factor(&l);
        let step = 2.0 / (k as f64 + 2.0);
        l = &l * (1.0 - step) + (z - uvt * tau) * step;
        let obj = nuclear_objective(z, &l, tau);
        if obj < best.0 {
            best = (obj, l.clone());
        }
    }
    best.1
}

pub fn tree_objective(
    v: &DMatrix<f64>,
    x: &DMatrix<f64>,
    tree: &IndexTree,
    weights: &[f64],
    tau: f64,
    lambda: f64,
) -> f64 {
    let groups: f64 = tree
        .nodes
        .iter()
        .map(|n| weights[n.id] * n.members.iter().map(|&c| x.column(c).norm_squared()).sum::<f64>().sqrt())
        .sum();
    let l1: f64 = x.iter().map(|e| e.abs()).sum();
    0.5 * (x - v).norm_squared() + tau * (groups + lambda * l1)
}

/// Dual block-coordinate projection: the prox equals `v` minus the sum of dual
/// variables, one per group (ball of radius `tau * w`) and one per entry (box of
/// half-width `tau * lambda`).
pub fn tree_prox_oracle(
    v: &DMatrix<f64>,
    tree: &IndexTree,
    weights: &[f64],
    tau: f64,
    lambda: f64,
    sweeps: usize,
) -> DMatrix<f64> {
    let mut duals: Vec<DMatrix<f64>> = tree.nodes.iter().map(|_| DMatrix::zeros(v.nrows(), v.ncols())).collect();
    let mut box_dual = DMatrix::zeros(v.nrows(), v.ncols());
    let mut x = v.clone();
    for _ in 0..sweeps {
        let before = x.clone();
        // entry box
        x += &box_dual;
        let box_r = tau * lambda;
        box_dual = x.map(|e| e.clamp(-box_r, box_r));
        x -= &box_dual;
        for node in &tree.nodes {
            let d = &mut duals[node.id];
            for &c in &node.members {
                let col = x.column(c) + d.column(c);
                x.column_mut(c).copy_from(&col);
            }
            let norm = node.members.iter().map(|&c| x.column(c).norm_squared()).sum::<f64>().sqrt();
            let radius = tau * weights[node.id];
            let scale = if norm > radius { radius / norm } else { 1.0 };
            for &c in &node.members {
                let proj = x.column(c) * scale;
                d.column_mut(c).copy_from(&proj);
                let col = x.column(c) - proj;
                x.column_mut(c).copy_from(&col);
            }
        }
        if (&x - &before).amax() < 1e-15 {
            break;
        }
    }
    x
}

/// Bilinear warp written directly from the definition, summing the four neighbours.
pub fn brute_warp(pixels: &DMatrix<f64>, p: [f64; 6], out_h: usize, out_w: usize) -> DMatrix<f64> {
    let [lx, ly, theta, s, alpha, phi] = p;
    let rot = [[theta.cos(), -theta.sin()], [theta.sin(), theta.cos()]];
    let shape = [[s, phi * s * alpha], [0.0, s * alpha]];
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = rot[i][0] * shape[0][j] + rot[i][1] * shape[1][j];
        }
    }
    let (h, w) = (pixels.nrows() as i64, pixels.ncols() as i64);
    DMatrix::from_fn(out_h, out_w, |u, v| {
        let cx = v as f64 * 32.0 / out_w as f64 - 16.0;
        let cy = u as f64 * 32.0 / out_h as f64 - 16.0;
        let x = lx + m[0][0] * cx + m[0][1] * cy;
        let y = ly + m[1][0] * cx + m[1][1] * cy;
        let mut acc = 0.0;
        for r in [y.floor() as i64, y.floor() as i64 + 1] {
            for c in [x.floor() as i64, x.floor() as i64 + 1] {
                let wgt = (1.0 - (x - c as f64).abs()).max(0.0) * (1.0 - (y - r as f64).abs()).max(0.0);
                if wgt > 0.0 && r >= 0 && c >= 0 && r < h && c < w {
                    acc += wgt * pixels[(r as usize, c as usize)];
                }
            }
        }
        acc
    })
}

pub const SQUARE_FRAMES: usize = 50;
pub const SQUARE_SIDE: usize = 24;

/// True centre `(x, y)` of the square at frame `t`.
pub fn square_centre(t: usize) -> (f64, f64) {
    let left = 8 + 2 * t;
    (left as f64 + (SQUARE_SIDE as f64 - 1.0) / 2.0, 24.0 + (SQUARE_SIDE as f64 - 1.0) / 2.0)
}

/// A bright 24×24 square moving right by 2 px per frame on black, in a 72×144 frame.
pub fn square_sequence() -> Vec<DMatrix<f64>> {
    (0..SQUARE_FRAMES)
        .map(|t| {
            let left = 8 + 2 * t;
            DMatrix::from_fn(72, 144, |r, c| {
                let inside = (24..24 + SQUARE_SIDE).contains(&r) && (left..left + SQUARE_SIDE).contains(&c);
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect()
}

pub struct RecoveryInstance {
    pub f: DMatrix<f64>,
    pub l0: DMatrix<f64>,
    pub s0: DMatrix<f64>,
    pub tree: IndexTree,
}

/// Rank-2 64×100 `L0` with standard normal factors plus `±1` entries on every row
/// of five leaf groups of a tree over a 10×10 grid of column positions.
pub fn recovery_instance(seed: u64) -> RecoveryInstance {
    let mut rng = rng(seed);
    let u = gaussian(&mut rng, 64, 2);
    let v = gaussian(&mut rng, 100, 2);
    let l0 = &u * v.transpose();
    let points: Vec<Vec<f64>> = (0..100).map(|j| vec![(j / 10) as f64 / 10.0, (j % 10) as f64 / 10.0]).collect();
    let tree = build_index_tree(&points, 4, 1);
    let leaves: Vec<Vec<usize>> = tree.leaves().map(|n| n.members.clone()).collect();
    let mut s0 = DMatrix::zeros(64, 100);
    for pick in [0usize, 7, 13, 20, 29] {
        for &c in &leaves[pick % leaves.len()] {
            for r in 0..64 {
                s0[(r, c)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
        }
    }
    let f = &l0 + &s0;
    RecoveryInstance { f, l0, s0, tree }
}

/// Entry-level support F1 of `s` (|entry| > 1e-6) against the nonzeros of `s0`.
pub fn support_f1(s: &DMatrix<f64>, s0: &DMatrix<f64>) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (a, b) in s.iter().zip(s0.iter()) {
        match (a.abs() > 1e-6, *b != 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
}

/// Random points for tree tests: clustered blobs, exact duplicates or uniform noise.
pub fn random_points(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    let n = rng.random_range(1..=120);
    let dim = rng.random_range(1..=5);
    match seed % 3 {
        0 => (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect(),
        1 => {
            let centres: Vec<Vec<f64>> = (0..4).map(|_| (0..dim).map(|_| rng.random::<f64>() * 10.0).collect()).collect();
            (0..n)
                .map(|i| centres[i % 4].iter().map(|c| c + 0.1 * rng.random::<f64>()).collect())
                .collect()
        }
        _ => {
            // few distinct values, many duplicates
            (0..n).map(|i| vec![(i % 3) as f64; dim]).collect()
        }
    }
}
