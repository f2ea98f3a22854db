//! The generic box/sphere ADMM loop.
//!
//! Each iteration performs, in order: the x-update delegated to a
//! [`Subproblem`], the box and sphere projections of `z1`/`z2`, the
//! subproblem's own auxiliary and dual block (slacks, constraint duals),
//! dual ascent on `y1`/`y2`, and finally geometric penalty growth.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::geometry::{project_box_in_place, project_sphere_l2_in_place};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmParams {
    /// Initial penalties `(ρ1, ρ2, ρ3, ρ4)` for `x = z1`, `x = z2`, `C1x = d1`, `C2x + z3 = d2`.
    pub rho_init: [f64; 4],
    /// Per-iteration penalty growth factor.
    pub mu: f64,
    /// Penalty ceiling; keeps the schedule convergent.
    pub rho_max: f64,
    /// Dual step scale, in `(0, 1]`.
    pub gamma: f64,
    /// Primal residuals must fall below `stop_tol·√n`.
    pub stop_tol: f64,
    pub max_iterations: usize,
    /// Iteration from which `y2` is held fixed.
    pub y2_freeze_at: Option<usize>,
    pub binarize_tol: f64,
    /// Relative tolerance of the PCG x-update.
    pub pcg_tol: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self::with_max_iterations(1000)
    }
}

impl AdmmParams {
    /// Defaults with the `y2` freeze placed at half the iteration budget.
    pub fn with_max_iterations(max_iterations: usize) -> Self {
        Self {
            rho_init: [1e-3; 4],
            mu: 1.03,
            rho_max: 1e6,
            gamma: 0.9,
            stop_tol: 1e-5,
            max_iterations,
            y2_freeze_at: Some(max_iterations / 2),
            binarize_tol: 1e-3,
            pcg_tol: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if let Some(r) = self
            .rho_init
            .iter()
            .find(|r| !(**r > 0.0) || !r.is_finite())
        {
            return bad(format!(
                "initial penalties must be positive and finite, got {r}"
            ));
        }
        if !(self.mu >= 1.0) || !self.mu.is_finite() {
            return bad(format!("mu must be >= 1, got {}", self.mu));
        }
        if !self.rho_max.is_finite() || self.rho_init.iter().any(|&r| r > self.rho_max) {
            return bad(format!(
                "rho_max must be finite and at least every initial penalty, got {}",
                self.rho_max
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(self.stop_tol > 0.0) {
            return bad(format!("stop_tol must be > 0, got {}", self.stop_tol));
        }
        if !(self.binarize_tol >= 0.0 && self.binarize_tol < 0.5) {
            return bad(format!(
                "binarize_tol must lie in [0, 0.5), got {}",
                self.binarize_tol
            ));
        }
        if !(self.pcg_tol > 0.0) {
            return bad(format!("pcg_tol must be > 0, got {}", self.pcg_tol));
        }
        Ok(())
    }
}

/// Which continuous sets replace the binary constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relaxation {
    /// Box ∩ sphere: exactly the binary vectors.
    BoxSphere,
    /// Box only, the convex relaxation. `z2`/`y2` stay inert and `ρ2 = 0`.
    BoxOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    /// One slack per inequality row.
    pub z3: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub y3: Vec<f64>,
    pub y4: Vec<f64>,
    pub rho: [f64; 4],
    pub k: usize,
}

impl AdmmState {
    /// `z1 = P_box(x0)`, `z2 = P_sphere(x0)`, slacks and duals zero.
    pub fn initial(x0: &[f64], m1: usize, m2: usize, params: &AdmmParams) -> Self {
        let n = x0.len();
        let mut z1 = x0.to_vec();
        project_box_in_place(&mut z1);
        let mut z2 = x0.to_vec();
        project_sphere_l2_in_place(&mut z2);
        Self {
            x: x0.to_vec(),
            z1,
            z2,
            z3: vec![0.0; m2],
            y1: vec![0.0; n],
            y2: vec![0.0; n],
            y3: vec![0.0; m1],
            y4: vec![0.0; m2],
            rho: params.rho_init,
            k: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    fn first_non_finite(&self) -> Option<&'static str> {
        let fields: [(&'static str, &[f64]); 8] = [
            ("x", &self.x),
            ("z1", &self.z1),
            ("z2", &self.z2),
            ("z3", &self.z3),
            ("y1", &self.y1),
            ("y2", &self.y2),
            ("y3", &self.y3),
            ("y4", &self.y4),
        ];
        fields
            .into_iter()
            .find(|(_, v)| v.iter().any(|x| !x.is_finite()))
            .map(|(name, _)| name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    /// `‖x − z1‖₂`
    pub res_z1: f64,
    /// `‖x − z2‖₂`; zero under [`Relaxation::BoxOnly`].
    pub res_z2: f64,
    /// `‖C1x − d1‖₂`
    pub res_eq: f64,
    /// `‖max(C2x − d2, 0)‖₂`
    pub res_ineq: f64,
    /// `‖x − round(x)‖∞`
    pub binariness: f64,
    pub pcg_iters: usize,
    /// `‖y^{k+1} − y^k‖₂` over all dual blocks.
    pub dual_change: f64,
}

pub const TRACE_CSV_HEADER: &str = "k,objective,res_z1,res_z2,res_eq,res_ineq,binariness,pcg_iters";

pub fn write_trace_csv<W: Write>(trace: &[IterationRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for r in trace {
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.k, r.objective, r.res_z1, r.res_z2, r.res_eq, r.res_ineq, r.binariness, r.pcg_iters
        )?;
    }
    Ok(())
}

/// Result of one x-update.
#[derive(Debug, Clone, PartialEq)]
pub struct XUpdate {
    pub x: Vec<f64>,
    pub pcg_iters: usize,
    pub converged: bool,
    pub relative_residual: f64,
}

/// Problem-specific parts of an ADMM run.
pub trait Subproblem {
    fn dim(&self) -> usize;

    /// Minimizes the augmented Lagrangian over `x` at the current `(z, y, ρ)`.
    fn update_x(&mut self, state: &AdmmState) -> Result<XUpdate>;

    /// Updates slacks and constraint duals after `x`, `z1`, `z2` are fresh.
    /// Returns `‖Δy‖₂²` over the duals it owns.
    fn update_constraint_block(&mut self, state: &mut AdmmState, gamma: f64) -> f64;

    /// Grows penalties the subproblem owns beyond `ρ1..ρ4`.
    fn grow_extra_penalties(&mut self, _mu: f64, _rho_max: f64) {}

    fn objective(&self, x: &[f64]) -> f64;

    /// `(‖C1x − d1‖₂, ‖max(C2x − d2, 0)‖₂)`.
    fn constraint_residuals(&self, x: &[f64]) -> (f64, f64);
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    pub state: AdmmState,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

/// `y + γ·ρ·residual`.
pub fn dual_ascent_step(y: &[f64], residual: &[f64], gamma: f64, rho: f64) -> Result<Vec<f64>> {
    check_len("dual_ascent_step", y.len(), residual.len())?;
    Ok(y.iter()
        .zip(residual)
        .map(|(y, r)| y + gamma * rho * r)
        .collect())
}

/// Rounds to the nearest binary vector, failing if any component is farther
/// than `tol` from both 0 and 1.
pub fn binarize(x: &[f64], tol: f64) -> Result<Vec<u8>> {
    x.iter()
        .enumerate()
        .map(|(index, &value)| {
            let r = value.round();
            if (r == 0.0 || r == 1.0) && (value - r).abs() <= tol {
                Ok(r as u8)
            } else {
                Err(Error::NotBinary { index, value, tol })
            }
        })
        .collect()
}

/// `‖x − round(x)‖∞` where rounding is to the nearest of {0, 1}.
pub fn binariness(x: &[f64]) -> f64 {
    x.iter()
        .map(|&v| (v - v.clamp(0.0, 1.0).round()).abs())
        .fold(0.0, f64::max)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Runs ADMM from `init` until the stopping rule holds or the budget is spent.
///
/// Stopping rule: `‖x − z1‖`, `‖x − z2‖`, `‖C1x − d1‖` and `‖max(C2x − d2, 0)‖`
/// all at most `stop_tol·√n`, plus `binariness(x) ≤ binarize_tol` under
/// [`Relaxation::BoxSphere`], or a dual residual `ρ1‖Δz1‖ ≤ stop_tol·√n`
/// under [`Relaxation::BoxOnly`].
pub fn admm_run<S: Subproblem + ?Sized>(
    sub: &mut S,
    params: &AdmmParams,
    init: AdmmState,
    relaxation: Relaxation,
) -> Result<AdmmOutcome> {
    params.validate()?;
    let n = sub.dim();
    let mut state = init;
    check_len("initial x", n, state.x.len())?;
    check_len("initial z1", n, state.z1.len())?;
    check_len("initial z2", n, state.z2.len())?;
    check_len("initial y1", n, state.y1.len())?;
    check_len("initial y2", n, state.y2.len())?;
    check_len("initial z3/y4", state.z3.len(), state.y4.len())?;

    let sphere = relaxation == Relaxation::BoxSphere;
    if !sphere {
        state.rho[1] = 0.0;
    }
    let threshold = params.stop_tol * (n as f64).sqrt();
    let gamma = params.gamma;
    let mut trace = Vec::with_capacity(params.max_iterations.min(4096));
    let mut converged = false;
    let mut z1_prev = state.z1.clone();

    for _ in 0..params.max_iterations {
        let k = state.k;
        let update = sub.update_x(&state)?;
        if !update.converged {
            return Err(Error::SubproblemNotConverged {
                k,
                iterations: update.pcg_iters,
                relative_residual: update.relative_residual,
            });
        }
        state.x = update.x;
        if state.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                k,
                variable: "x",
                state: Box::new(state),
            });
        }

        let [rho1, rho2, ..] = state.rho;
        z1_prev.copy_from_slice(&state.z1);
        for i in 0..n {
            state.z1[i] = state.x[i] + state.y1[i] / rho1;
        }
        project_box_in_place(&mut state.z1);
        if sphere {
            for i in 0..n {
                state.z2[i] = state.x[i] + state.y2[i] / rho2;
            }
            project_sphere_l2_in_place(&mut state.z2);
        }

        let mut dual_change_sq = sub.update_constraint_block(&mut state, gamma);

        let res_z1 = distance(&state.x, &state.z1);
        for i in 0..n {
            state.y1[i] += gamma * rho1 * (state.x[i] - state.z1[i]);
        }
        dual_change_sq += (gamma * rho1 * res_z1).powi(2);

        let res_z2 = if sphere {
            distance(&state.x, &state.z2)
        } else {
            0.0
        };
        let frozen = params.y2_freeze_at.is_some_and(|at| k >= at);
        if sphere && !frozen {
            for i in 0..n {
                state.y2[i] += gamma * rho2 * (state.x[i] - state.z2[i]);
            }
            dual_change_sq += (gamma * rho2 * res_z2).powi(2);
        }

        if let Some(variable) = state.first_non_finite() {
            return Err(Error::NonFinite {
                k,
                variable,
                state: Box::new(state),
            });
        }

        let (res_eq, res_ineq) = sub.constraint_residuals(&state.x);
        let record = IterationRecord {
            k,
            objective: sub.objective(&state.x),
            res_z1,
            res_z2,
            res_eq,
            res_ineq,
            binariness: binariness(&state.x),
            pcg_iters: update.pcg_iters,
            dual_change: dual_change_sq.sqrt(),
        };

        let primal_ok = res_z1.max(res_z2).max(res_eq).max(res_ineq) <= threshold;
        let done = primal_ok
            && if sphere {
                record.binariness <= params.binarize_tol
            } else {
                rho1 * distance(&state.z1, &z1_prev) <= threshold
            };
        trace.push(record);

        for r in state.rho.iter_mut() {
            *r = (*r * params.mu).min(params.rho_max);
        }
        sub.grow_extra_penalties(params.mu, params.rho_max);
        state.k += 1;

        if done {
            converged = true;
            break;
        }
    }

    Ok(AdmmOutcome {
        state,
        converged,
        trace,
    })
}

/// How a finished solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Stopping rule met and the rounded point satisfies every constraint.
    Converged,
    /// Iteration budget exhausted; `x` is the nearest binary point to the last iterate.
    NotConverged,
    /// Stopping rule met but the rounded point violates a constraint beyond 1e-6.
    InfeasibleRounding,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::NotConverged => "not_converged",
            SolveStatus::InfeasibleRounding => "infeasible_rounding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Binary solution.
    pub x: Vec<u8>,
    /// Objective of `x` in the caller's original coefficients.
    pub objective: f64,
    /// Final continuous iterate.
    pub relaxed: Vec<f64>,
    pub binariness: f64,
    /// `‖C1x − d1‖₂` at the binary `x`.
    pub eq_residual: f64,
    /// `‖max(C2x − d2, 0)‖₂` at the binary `x`.
    pub ineq_residual: f64,
    pub feasible: bool,
    pub status: SolveStatus,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn x_f64(&self) -> Vec<f64> {
        self.x.iter().map(|&b| f64::from(b)).collect()
    }
}
