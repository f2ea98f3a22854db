//! Preconditioned conjugate gradient over matrix-free operators.

use serde::{Deserialize, Serialize};

use super::sparse::{dot, norm2, SparseMatrix};
use crate::error::{check_len, Error, Result};

/// A symmetric linear map applied without materializing its matrix.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `out = Op·v`. Both slices have length `dim()`.
    fn apply(&self, v: &[f64], out: &mut [f64]);

    /// The operator diagonal, when cheaply available; enables Jacobi scaling.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.mul_into(v, out);
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(SparseMatrix::diagonal(self))
    }
}

/// Wraps a closure as an operator with an optional known diagonal.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
    diagonal: Option<Vec<f64>>,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            diagonal: None,
        }
    }

    pub fn with_diagonal(mut self, diagonal: Vec<f64>) -> Self {
        self.diagonal = Some(diagonal);
        self
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (self.f)(v, out)
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        self.diagonal.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcgSettings {
    /// Stop once `‖Op·x − b‖ ≤ rel_tolerance · ‖b‖`.
    pub rel_tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
}

impl PcgSettings {
    /// Default settings for an `n`-dimensional system: tolerance 1e-8, `10·n` iterations.
    pub fn for_dimension(n: usize) -> Self {
        Self {
            rel_tolerance: 1e-8,
            max_iterations: (10 * n).max(1),
            preconditioner: Preconditioner::Jacobi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "PCG rel_tolerance must be > 0, got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "PCG max_iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final true residual norm `‖Op·x − b‖₂`.
    pub residual: f64,
    pub converged: bool,
}

impl PcgSolution {
    pub fn relative_residual(&self, b_norm: f64) -> f64 {
        if b_norm > 0.0 {
            self.residual / b_norm
        } else {
            self.residual
        }
    }
}

/// Solves `Op·x = b` for a symmetric positive definite `Op`, starting from `x0`.
///
/// When the iteration cap is hit, the iterate with the smallest recursive
/// residual is returned with `converged = false`. Non-finite values or a
/// non-positive curvature `pᵀ·Op·p` abort with [`Error::PcgBreakdown`].
pub fn pcg_solve<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[f64],
    x0: &[f64],
    settings: &PcgSettings,
) -> Result<PcgSolution> {
    settings.validate()?;
    let n = op.dim();
    check_len("pcg right-hand side", n, b.len())?;
    check_len("pcg initial guess", n, x0.len())?;

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(PcgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let target = settings.rel_tolerance * b_norm;

    let inv_diag = match settings.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => op.diagonal().map(|d| {
            d.iter()
                .map(|&v| if v > 0.0 { 1.0 / v } else { 1.0 })
                .collect::<Vec<_>>()
        }),
    };
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(inv) => z
            .iter_mut()
            .zip(r.iter().zip(inv))
            .for_each(|(z, (r, d))| *z = r * d),
        None => z.copy_from_slice(r),
    };

    let mut x = x0.to_vec();
    let mut ap = vec![0.0; n];
    op.apply(&x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut r_norm = norm2(&r);
    if !r_norm.is_finite() {
        return Err(Error::PcgBreakdown {
            iteration: 0,
            reason: "non-finite initial residual".into(),
        });
    }

    let mut best_x = x.clone();
    let mut best_norm = r_norm;
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;

    while r_norm > target && iterations < settings.max_iterations {
        op.apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) || !curvature.is_finite() {
            return Err(Error::PcgBreakdown {
                iteration: iterations,
                reason: format!(
                    "curvature pᵀAp = {curvature:e}; operator is not positive definite"
                ),
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        r_norm = norm2(&r);
        if !r_norm.is_finite() {
            return Err(Error::PcgBreakdown {
                iteration: iterations,
                reason: "non-finite residual".into(),
            });
        }
        if r_norm < best_norm {
            best_norm = r_norm;
            best_x.copy_from_slice(&x);
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let converged = r_norm <= target;
    let x = if converged { x } else { best_x };
    op.apply(&x, &mut ap);
    let residual = norm2(&b.iter().zip(&ap).map(|(b, a)| b - a).collect::<Vec<_>>());
    Ok(PcgSolution {
        x,
        iterations,
        residual,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_in_one_iteration() {
        let id = SparseMatrix::identity(2);
        let sol = pcg_solve(
            &id,
            &[3.0, 4.0],
            &[0.0, 0.0],
            &PcgSettings::for_dimension(2),
        )
        .unwrap();
        assert!(sol.converged);
        assert!(sol.iterations <= 1);
        assert_eq!(sol.x, vec![3.0, 4.0]);
    }

    #[test]
    fn two_by_two_system() {
        let a = dense(&[&[4.0, 1.0], &[1.0, 3.0]]);
        for pre in [Preconditioner::None, Preconditioner::Jacobi] {
            let settings = PcgSettings {
                preconditioner: pre,
                ..PcgSettings::for_dimension(2)
            };
            let sol = pcg_solve(&a, &[1.0, 2.0], &[0.0, 0.0], &settings).unwrap();
            assert!(sol.converged);
            assert!((sol.x[0] - 1.0 / 11.0).abs() < 1e-12);
            assert!((sol.x[1] - 7.0 / 11.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_identity() {
        let op = FnOperator::new(2, |v: &[f64], out: &mut [f64]| {
            out.iter_mut().zip(v).for_each(|(o, v)| *o = 2.0 * v)
        })
        .with_diagonal(vec![2.0, 2.0]);
        let sol = pcg_solve(
            &op,
            &[2.0, 2.0],
            &[0.0, 0.0],
            &PcgSettings::for_dimension(2),
        )
        .unwrap();
        assert_eq!(sol.x, vec![1.0, 1.0]);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = dense(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let sol = pcg_solve(&a, &[0.0, 0.0], &[5.0, 5.0], &PcgSettings::for_dimension(2)).unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn indefinite_operator_breaks_down() {
        let a = dense(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let settings = PcgSettings {
            preconditioner: Preconditioner::None,
            ..PcgSettings::for_dimension(2)
        };
        assert!(matches!(
            pcg_solve(&a, &[0.0, 1.0], &[0.0, 0.0], &settings),
            Err(Error::PcgBreakdown { .. })
        ));
    }

    #[test]
    fn nan_rhs_breaks_down() {
        let a = SparseMatrix::identity(2);
        assert!(pcg_solve(
            &a,
            &[f64::NAN, 1.0],
            &[0.0, 0.0],
            &PcgSettings::for_dimension(2)
        )
        .is_err());
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let a = dense(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 5.0]]);
        let settings = PcgSettings {
            rel_tolerance: 1e-14,
            max_iterations: 1,
            preconditioner: Preconditioner::None,
        };
        let sol = pcg_solve(&a, &[1.0, 2.0, 3.0], &[0.0; 3], &settings).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
        assert!(sol.residual > 0.0);
    }

    #[test]
    fn rejects_bad_settings() {
        let a = SparseMatrix::identity(1);
        let bad = PcgSettings {
            rel_tolerance: 0.0,
            ..PcgSettings::for_dimension(1)
        };
        assert!(pcg_solve(&a, &[1.0], &[0.0], &bad).is_err());
        assert!(pcg_solve(&a, &[1.0, 2.0], &[0.0], &PcgSettings::for_dimension(1)).is_err());
    }
}
