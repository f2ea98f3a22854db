//! `min f(x) + λ‖Cx‖₁` over binary feasible `x`, via an extra split `Cx = z0`.

use crate::admm::{admm_run, AdmmParams, AdmmState, Relaxation, SolveResult, Subproblem, XUpdate};
use crate::bqp::{
    bqp_slack_dual_update, finish, initial_state, pcg_settings, x_update_with, BqpProblem, Coupling,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::{spmv, PcgSettings, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct L1Problem {
    /// Quadratic `f` and the linear constraints.
    pub base: BqpProblem,
    /// `m0 × n` filter, e.g. first differences.
    pub c: SparseMatrix,
    pub lambda: f64,
    /// Initial penalty on `Cx = z0`.
    pub rho0: f64,
}

impl L1Problem {
    pub fn new(base: BqpProblem, c: SparseMatrix, lambda: f64, rho0: f64) -> Result<Self> {
        let p = Self {
            base,
            c,
            lambda,
            rho0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_len("l1 filter columns", self.base.dim(), self.c.n_cols())?;
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.rho0 > 0.0) || !self.rho0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho0 must be > 0, got {}",
                self.rho0
            )));
        }
        Ok(())
    }

    /// `‖Cx‖₁`.
    pub fn penalty(&self, x: &[f64]) -> f64 {
        spmv(&self.c, x)
            .expect("x matches the filter")
            .iter()
            .map(|v| v.abs())
            .sum()
    }

    /// `f(x) + λ‖Cx‖₁` with `f` in the caller's original coefficients.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.base.reported_objective(x) + self.lambda * self.penalty(x)
    }
}

/// `sign(v)·max(|v| − κ, 0)` elementwise.
pub fn soft_threshold(v: &[f64], kappa: f64) -> Vec<f64> {
    v.iter().map(|&x| soft(x, kappa)).collect()
}

fn soft(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

/// Split variable, its dual, and its penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct L1State {
    pub z0: Vec<f64>,
    pub y0: Vec<f64>,
    pub rho0: f64,
}

impl L1State {
    /// `z0 = Cx0`, `y0 = 0`.
    pub fn initial(p: &L1Problem, x0: &[f64]) -> Result<Self> {
        Ok(Self {
            z0: spmv(&p.c, x0)?,
            y0: vec![0.0; p.c.n_rows()],
            rho0: p.rho0,
        })
    }
}

/// x-update with `ρ0CᵀC` added to the operator and `Cᵀ(ρ0z0 − y0)` to the right-hand side.
pub fn l1_x_update(
    p: &L1Problem,
    state: &AdmmState,
    aux: &L1State,
    pcg: &PcgSettings,
) -> Result<XUpdate> {
    check_len("z0", p.c.n_rows(), aux.z0.len())?;
    check_len("y0", p.c.n_rows(), aux.y0.len())?;
    let coupling = (p.lambda > 0.0).then_some(Coupling {
        c: &p.c,
        rho: aux.rho0,
        z: &aux.z0,
        y: &aux.y0,
    });
    x_update_with(&p.base, state, pcg, coupling)
}

/// `z0 ← S_{λ/ρ0}(Cx + y0/ρ0)`, then `y0 += γρ0(Cx − z0)`. Returns `‖Δy0‖²`.
pub fn l1_z0_y0_update(p: &L1Problem, x: &[f64], aux: &mut L1State, gamma: f64) -> f64 {
    let cx = spmv(&p.c, x).expect("x matches the filter");
    let kappa = p.lambda / aux.rho0;
    let mut change = 0.0;
    for j in 0..cx.len() {
        aux.z0[j] = soft(cx[j] + aux.y0[j] / aux.rho0, kappa);
        let step = gamma * aux.rho0 * (cx[j] - aux.z0[j]);
        aux.y0[j] += step;
        change += step * step;
    }
    change
}

/// [`Subproblem`] wiring for the ℓ1 extension. With `λ = 0` the split is
/// skipped and every iterate coincides with the plain BQP solve.
pub struct L1Subproblem<'a> {
    problem: &'a L1Problem,
    pcg: PcgSettings,
    pub aux: L1State,
}

impl<'a> L1Subproblem<'a> {
    pub fn new(problem: &'a L1Problem, params: &AdmmParams, x0: &[f64]) -> Result<Self> {
        Ok(Self {
            problem,
            pcg: pcg_settings(problem.base.dim(), params),
            aux: L1State::initial(problem, x0)?,
        })
    }

    fn active(&self) -> bool {
        self.problem.lambda > 0.0
    }
}

impl Subproblem for L1Subproblem<'_> {
    fn dim(&self) -> usize {
        self.problem.base.dim()
    }

    fn update_x(&mut self, state: &AdmmState) -> Result<XUpdate> {
        l1_x_update(self.problem, state, &self.aux, &self.pcg)
    }

    fn update_constraint_block(&mut self, state: &mut AdmmState, gamma: f64) -> f64 {
        let mut change = bqp_slack_dual_update(&self.problem.base, state, gamma);
        if self.active() {
            change += l1_z0_y0_update(self.problem, &state.x, &mut self.aux, gamma);
        }
        change
    }

    fn grow_extra_penalties(&mut self, mu: f64, rho_max: f64) {
        self.aux.rho0 = (self.aux.rho0 * mu).min(rho_max);
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let f = self.problem.base.objective(x);
        if self.active() {
            f + self.problem.lambda * self.problem.penalty(x)
        } else {
            f
        }
    }

    fn constraint_residuals(&self, x: &[f64]) -> (f64, f64) {
        self.problem.base.constraint_residuals(x)
    }
}

/// Box/sphere ADMM on `f + λ‖C·‖₁`. The reported objective is `f(x) + λ‖Cx‖₁`
/// at the binary `x`.
pub fn solve_l1(p: &L1Problem, params: &AdmmParams, x0: &[f64]) -> Result<SolveResult> {
    p.validate()?;
    let init = initial_state(&p.base, x0, params)?;
    let mut sub = L1Subproblem::new(p, params, x0)?;
    let outcome = admm_run(&mut sub, params, init, Relaxation::BoxSphere)?;
    let mut result = finish(&p.base, outcome, Relaxation::BoxSphere, params);
    result.objective += p.lambda * p.penalty(&result.x_f64());
    Ok(result)
}

/// `(n−1) × n` first-difference matrix, row `i` is `x[i+1] − x[i]`.
pub fn first_difference(n: usize) -> SparseMatrix {
    let rows = n.saturating_sub(1);
    let t = (0..rows).flat_map(|i| [(i, i, -1.0), (i, i + 1, 1.0)]);
    SparseMatrix::from_triplets(rows, n, t).expect("indices in range")
}
