//! Deterministic inputs shared by the benchmarks.

use nalgebra::DMatrix;

/// Smooth pseudo-random matrix; no generator needed, same values every run.
pub fn wavy(rows: usize, cols: usize, phase: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |r, c| ((r * 31 + c * 17) as f64 * 0.37 + phase).sin())
}

/// Rank-2 matrix plus a handful of dense columns.
pub fn low_rank_plus_sparse(rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = wavy(rows, 2, 0.0) * wavy(2, cols, 1.3);
    for c in (0..cols).step_by(11) {
        for r in 0..rows {
            m[(r, c)] += 0.5 * ((r + c) as f64).cos();
        }
    }
    m
}
