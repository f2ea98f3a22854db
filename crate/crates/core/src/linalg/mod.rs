//! Sparse storage, products, and the SPD iterative solver behind every x-update.

mod mtx;
mod pcg;
mod sparse;

pub use mtx::{parse_matrix_market, read_matrix_market, to_matrix_market, write_matrix_market};
pub use pcg::{pcg_solve, FnOperator, LinearOperator, PcgSettings, PcgSolution, Preconditioner};
pub use sparse::{dot, kron_identity_apply, norm2, spmv, spmv_transpose, SparseMatrix};

pub(crate) use sparse::kron_identity_into;

/// Upper bound on the spectral radius from Gershgorin discs.
pub(crate) fn gershgorin_radius(m: &SparseMatrix) -> f64 {
    (0..m.n_rows())
        .map(|r| m.row(r).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Estimates the smallest eigenvalue of a symmetric operator by power iteration
/// on `σI − Op`, where `σ` bounds the spectrum from above.
///
/// The Rayleigh quotient approaches `σ − λ_min` from below, so the returned
/// estimate is never below the true `λ_min`.
pub fn smallest_eigenvalue_estimate<O: LinearOperator + ?Sized>(
    op: &O,
    sigma: f64,
    iterations: usize,
) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    // deterministic start with no symmetry that could hide an eigenvector
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0)
        .collect();
    let mut w = vec![0.0; n];
    let mut rayleigh = 0.0;
    for _ in 0..iterations {
        let norm = norm2(&v);
        if norm == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        op.apply(&v, &mut w);
        for i in 0..n {
            w[i] = sigma * v[i] - w[i];
        }
        rayleigh = dot(&v, &w);
        std::mem::swap(&mut v, &mut w);
    }
    sigma - rayleigh
}
