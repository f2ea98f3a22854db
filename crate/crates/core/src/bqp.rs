//! Binary quadratic programs `min xᵀAx + bᵀx  s.t. C1x = d1, C2x ≤ d2, x ∈ {0,1}^n`
//! solved by box/sphere ADMM.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::admm::{
    admm_run, binariness, binarize, AdmmOutcome, AdmmParams, AdmmState, Relaxation, SolveResult,
    SolveStatus, Subproblem, XUpdate,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::{
    dot, gershgorin_radius, kron_identity_into, norm2, pcg_solve, smallest_eigenvalue_estimate,
    LinearOperator, PcgSettings, SparseMatrix,
};

/// Symmetry tolerance applied when a quadratic term is accepted.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Constraint violation (max-abs) tolerated when judging a rounded point feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Power iterations used by [`psd_shift_bound`].
pub const PSD_POWER_ITERATIONS: usize = 500;

/// The quadratic coefficient matrix, stored explicitly or as `I_K ⊗ L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Quadratic {
    Sparse(SparseMatrix),
    KronIdentity { blocks: usize, block: SparseMatrix },
}

impl Quadratic {
    pub fn dim(&self) -> usize {
        match self {
            Quadratic::Sparse(m) => m.n_rows(),
            Quadratic::KronIdentity { blocks, block } => blocks * block.n_rows(),
        }
    }

    pub(crate) fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Quadratic::Sparse(m) => m.mul_into(v, out),
            Quadratic::KronIdentity { blocks, block } => kron_identity_into(*blocks, block, v, out),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("quadratic apply", self.dim(), v.len())?;
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Quadratic::Sparse(m) => m.diagonal(),
            Quadratic::KronIdentity { blocks, block } => block.diagonal().repeat(*blocks),
        }
    }

    /// `xᵀQx`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut tmp = vec![0.0; self.dim()];
        self.apply_into(x, &mut tmp);
        dot(x, &tmp)
    }

    /// Materializes the full matrix.
    pub fn to_sparse(&self) -> SparseMatrix {
        match self {
            Quadratic::Sparse(m) => m.clone(),
            Quadratic::KronIdentity { blocks, block } => {
                let (r, c) = (block.n_rows(), block.n_cols());
                let triplets = (0..*blocks).flat_map(|k| {
                    block
                        .triplets()
                        .map(move |(i, j, v)| (k * r + i, k * c + j, v))
                });
                SparseMatrix::from_triplets(blocks * r, blocks * c, triplets)
                    .expect("block entries stay in range")
            }
        }
    }

    pub fn check_symmetric(&self) -> Result<()> {
        match self {
            Quadratic::Sparse(m) => m.check_symmetric(SYMMETRY_TOL),
            Quadratic::KronIdentity { block, .. } => block.check_symmetric(SYMMETRY_TOL),
        }
    }

    /// `Q + αI`.
    pub fn shifted(&self, alpha: f64) -> Quadratic {
        let shift = |m: &SparseMatrix| {
            m.add_diagonal(&vec![alpha; m.n_rows()])
                .expect("quadratic terms are square")
        };
        match self {
            Quadratic::Sparse(m) => Quadratic::Sparse(shift(m)),
            Quadratic::KronIdentity { blocks, block } => Quadratic::KronIdentity {
                blocks: *blocks,
                block: shift(block),
            },
        }
    }

    /// The matrix whose spectrum equals this operator's (the block for `I_K ⊗ L`).
    fn spectral_representative(&self) -> &SparseMatrix {
        match self {
            Quadratic::Sparse(m) => m,
            Quadratic::KronIdentity { block, .. } => block,
        }
    }
}

impl From<SparseMatrix> for Quadratic {
    fn from(m: SparseMatrix) -> Self {
        Quadratic::Sparse(m)
    }
}

/// Maps the solver's objective back to the caller's: `sign · f_original(x) + offset`.
///
/// Reductions use this to report e.g. a maximization value or a dropped constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub sign: f64,
    pub offset: f64,
}

impl Default for ObjectiveReport {
    fn default() -> Self {
        Self {
            sign: 1.0,
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BqpProblem {
    pub a: Quadratic,
    pub b: Vec<f64>,
    pub c1: SparseMatrix,
    pub d1: Vec<f64>,
    pub c2: SparseMatrix,
    pub d2: Vec<f64>,
    /// Total diagonal shift `α` already folded into `a` and `b`.
    pub psd_shift: f64,
    pub report: ObjectiveReport,
}

impl BqpProblem {
    /// An unconstrained problem; `a` must be symmetric.
    pub fn new(a: impl Into<Quadratic>, b: Vec<f64>) -> Result<Self> {
        let a = a.into();
        let n = a.dim();
        let p = Self {
            a,
            b,
            c1: SparseMatrix::zeros(0, n),
            d1: Vec::new(),
            c2: SparseMatrix::zeros(0, n),
            d2: Vec::new(),
            psd_shift: 0.0,
            report: ObjectiveReport::default(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Appends rows to `C1x = d1`.
    pub fn with_equalities(mut self, c1: SparseMatrix, d1: Vec<f64>) -> Result<Self> {
        self.c1 = self.c1.vstack(&c1)?;
        self.d1.extend(d1);
        self.validate()?;
        Ok(self)
    }

    /// Appends rows to `C2x ≤ d2`.
    pub fn with_inequalities(mut self, c2: SparseMatrix, d2: Vec<f64>) -> Result<Self> {
        self.c2 = self.c2.vstack(&c2)?;
        self.d2.extend(d2);
        self.validate()?;
        Ok(self)
    }

    pub fn with_report(mut self, report: ObjectiveReport) -> Self {
        self.report = report;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        check_len("b", n, self.b.len())?;
        check_len("C1 columns", n, self.c1.n_cols())?;
        check_len("d1", self.c1.n_rows(), self.d1.len())?;
        check_len("C2 columns", n, self.c2.n_cols())?;
        check_len("d2", self.c2.n_rows(), self.d2.len())?;
        if !(self.psd_shift >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "psd_shift must be >= 0, got {}",
                self.psd_shift
            )));
        }
        self.a.check_symmetric()
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn n_equalities(&self) -> usize {
        self.c1.n_rows()
    }

    pub fn n_inequalities(&self) -> usize {
        self.c2.n_rows()
    }

    /// Folds `αI` into `a` and `−α·1` into `b`; binary objectives are unchanged.
    pub fn with_psd_shift(mut self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "PSD shift must be >= 0, got {alpha}"
            )));
        }
        if alpha > 0.0 {
            self.a = self.a.shifted(alpha);
            self.b.iter_mut().for_each(|b| *b -= alpha);
            self.psd_shift += alpha;
        }
        Ok(self)
    }

    /// Applies the smallest shift from [`psd_shift_bound`].
    pub fn shifted_to_psd(self) -> Result<Self> {
        let alpha = psd_shift_bound(self.a.spectral_representative());
        self.with_psd_shift(alpha)
    }

    /// `xᵀAx + bᵀx` in the working (shifted) coefficients.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.a.quad_form(x) + dot(&self.b, x)
    }

    /// The objective in the coefficients before any PSD shift.
    pub fn original_objective(&self, x: &[f64]) -> f64 {
        let f = self.objective(x);
        if self.psd_shift == 0.0 {
            return f;
        }
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let lin: f64 = x.iter().sum();
        f - self.psd_shift * (sq - lin)
    }

    /// The objective as the caller of a reduction sees it.
    pub fn reported_objective(&self, x: &[f64]) -> f64 {
        self.report.sign * self.original_objective(x) + self.report.offset
    }

    /// `C1x − d1`.
    pub fn equality_gap(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_equalities()];
        self.c1.mul_into(x, &mut out);
        out.iter_mut().zip(&self.d1).for_each(|(o, d)| *o -= d);
        out
    }

    /// `C2x − d2`.
    pub fn inequality_gap(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_inequalities()];
        self.c2.mul_into(x, &mut out);
        out.iter_mut().zip(&self.d2).for_each(|(o, d)| *o -= d);
        out
    }

    /// `(‖C1x − d1‖₂, ‖max(C2x − d2, 0)‖₂)`.
    pub fn constraint_residuals(&self, x: &[f64]) -> (f64, f64) {
        let eq = norm2(&self.equality_gap(x));
        let ineq = self
            .inequality_gap(x)
            .iter()
            .map(|g| g.max(0.0).powi(2))
            .fold(0.0, |acc, v| acc + v)
            .sqrt();
        (eq, ineq)
    }

    /// Max-abs constraint check with tolerance `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.equality_gap(x).iter().all(|g| g.abs() <= tol)
            && self.inequality_gap(x).iter().all(|&g| g <= tol)
    }
}

/// `A = M + αI`, `b = c − α·1`: identical objective on every binary `x`.
pub fn make_psd(m: &SparseMatrix, c: &[f64], alpha: f64) -> Result<(SparseMatrix, Vec<f64>)> {
    m.check_symmetric(SYMMETRY_TOL)?;
    check_len("make_psd linear term", m.n_rows(), c.len())?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "PSD shift must be >= 0, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok((m.clone(), c.to_vec()));
    }
    let a = m.add_diagonal(&vec![alpha; m.n_rows()])?;
    let b = c.iter().map(|c| c - alpha).collect();
    Ok((a, b))
}

/// `max(0, −λ_min)` plus a 10% margin, with `λ_min` estimated by power iteration.
pub fn psd_shift_bound(m: &SparseMatrix) -> f64 {
    let sigma = gershgorin_radius(m);
    if sigma == 0.0 {
        return 0.0;
    }
    let lambda_min = smallest_eigenvalue_estimate(m, sigma, PSD_POWER_ITERATIONS);
    // rounding noise on a PSD matrix is not a reason to shift
    if lambda_min >= -1e-12 * sigma {
        0.0
    } else {
        -1.1 * lambda_min
    }
}

/// `f(x) = xᵀAx + bᵀx` in the problem's working coefficients.
pub fn bqp_objective(p: &BqpProblem, x: &[f64]) -> Result<f64> {
    check_len("bqp_objective", p.dim(), x.len())?;
    Ok(p.objective(x))
}

/// An extra coupling `ρ·‖Cx − z + y/ρ‖²`-style term added to the x-update,
/// contributing `ρCᵀC` to the operator and `ρCᵀz − Cᵀy` to the right-hand side.
pub(crate) struct Coupling<'a> {
    pub c: &'a SparseMatrix,
    pub rho: f64,
    pub z: &'a [f64],
    pub y: &'a [f64],
}

/// The x-update operator `2A + (ρ1+ρ2)I + ρ3C1ᵀC1 + ρ4C2ᵀC2 [+ ρ0CᵀC]`, never assembled.
struct XOperator<'a> {
    p: &'a BqpProblem,
    rho: [f64; 4],
    extra: Option<(&'a SparseMatrix, f64)>,
    scratch: RefCell<[Vec<f64>; 3]>,
}

impl<'a> XOperator<'a> {
    fn new(p: &'a BqpProblem, rho: [f64; 4], extra: Option<(&'a SparseMatrix, f64)>) -> Self {
        let m0 = extra.map_or(0, |(c, _)| c.n_rows());
        Self {
            p,
            rho,
            extra,
            scratch: RefCell::new([
                vec![0.0; p.n_equalities()],
                vec![0.0; p.n_inequalities()],
                vec![0.0; m0],
            ]),
        }
    }
}

impl LinearOperator for XOperator<'_> {
    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let [r1, r2, r3, r4] = self.rho;
        self.p.a.apply_into(v, out);
        let diag = r1 + r2;
        out.iter_mut()
            .zip(v)
            .for_each(|(o, v)| *o = 2.0 * *o + diag * v);
        let mut scratch = self.scratch.borrow_mut();
        let [t1, t2, t0] = &mut *scratch;
        if !t1.is_empty() {
            self.p.c1.mul_into(v, t1);
            self.p.c1.mul_transpose_acc(r3, t1, out);
        }
        if !t2.is_empty() {
            self.p.c2.mul_into(v, t2);
            self.p.c2.mul_transpose_acc(r4, t2, out);
        }
        if let Some((c, r0)) = self.extra {
            c.mul_into(v, t0);
            c.mul_transpose_acc(r0, t0, out);
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let [r1, r2, r3, r4] = self.rho;
        let mut d: Vec<f64> = self
            .p
            .a
            .diagonal()
            .iter()
            .map(|a| 2.0 * a + r1 + r2)
            .collect();
        let mut add = |m: &SparseMatrix, rho: f64| {
            for (d, c) in d.iter_mut().zip(m.column_norms_sq()) {
                *d += rho * c;
            }
        };
        add(&self.p.c1, r3);
        add(&self.p.c2, r4);
        if let Some((c, r0)) = self.extra {
            add(c, r0);
        }
        Some(d)
    }
}

/// Right-hand side of the x-update linear system.
fn x_update_rhs(p: &BqpProblem, state: &AdmmState, extra: Option<&Coupling>) -> Vec<f64> {
    let [r1, r2, r3, r4] = state.rho;
    let mut rhs: Vec<f64> = (0..p.dim())
        .map(|i| r1 * state.z1[i] + r2 * state.z2[i] - p.b[i] - state.y1[i] - state.y2[i])
        .collect();
    if p.n_equalities() > 0 {
        // ρ3·C1ᵀd1 − C1ᵀy3 = C1ᵀ(ρ3·d1 − y3)
        let t: Vec<f64> =
            p.d1.iter()
                .zip(&state.y3)
                .map(|(d, y)| r3 * d - y)
                .collect();
        p.c1.mul_transpose_acc(1.0, &t, &mut rhs);
    }
    if p.n_inequalities() > 0 {
        // ρ4·C2ᵀ(d2 − z3) − C2ᵀy4
        let t: Vec<f64> = (0..p.n_inequalities())
            .map(|j| r4 * (p.d2[j] - state.z3[j]) - state.y4[j])
            .collect();
        p.c2.mul_transpose_acc(1.0, &t, &mut rhs);
    }
    if let Some(e) = extra {
        let t: Vec<f64> = e.z.iter().zip(e.y).map(|(z, y)| e.rho * z - y).collect();
        e.c.mul_transpose_acc(1.0, &t, &mut rhs);
    }
    rhs
}

pub(crate) fn x_update_with(
    p: &BqpProblem,
    state: &AdmmState,
    pcg: &PcgSettings,
    extra: Option<Coupling>,
) -> Result<XUpdate> {
    let rhs = x_update_rhs(p, state, extra.as_ref());
    let op = XOperator::new(p, state.rho, extra.as_ref().map(|e| (e.c, e.rho)));
    let sol = pcg_solve(&op, &rhs, &state.x, pcg)?;
    let relative_residual = sol.relative_residual(norm2(&rhs));
    Ok(XUpdate {
        x: sol.x,
        pcg_iters: sol.iterations,
        converged: sol.converged,
        relative_residual,
    })
}

/// Solves the x-update system by PCG warm-started from `state.x`.
///
/// The operator `2A + (ρ1+ρ2)I + ρ3C1ᵀC1 + ρ4C2ᵀC2` is positive definite
/// whenever `A ⪰ 0` and `ρ1 + ρ2 > 0`.
pub fn bqp_x_update(p: &BqpProblem, state: &AdmmState, pcg: &PcgSettings) -> Result<XUpdate> {
    check_state(p, state)?;
    if !(state.rho[0] + state.rho[1] > 0.0) {
        return Err(Error::InvalidParameter(
            "rho1 + rho2 must be positive".into(),
        ));
    }
    x_update_with(p, state, pcg, None)
}

fn check_state(p: &BqpProblem, s: &AdmmState) -> Result<()> {
    let n = p.dim();
    check_len("state x", n, s.x.len())?;
    check_len("state z1", n, s.z1.len())?;
    check_len("state z2", n, s.z2.len())?;
    check_len("state y1", n, s.y1.len())?;
    check_len("state y2", n, s.y2.len())?;
    check_len("state y3", p.n_equalities(), s.y3.len())?;
    check_len("state z3", p.n_inequalities(), s.z3.len())?;
    check_len("state y4", p.n_inequalities(), s.y4.len())
}

/// Slack projection then constraint-dual ascent:
/// `z3 ← max(d2 − C2x − y4/ρ4, 0)`, `y3 += γρ3(C1x − d1)`, `y4 += γρ4(C2x + z3 − d2)`.
///
/// Returns `‖Δy3‖² + ‖Δy4‖²`.
pub fn bqp_slack_dual_update(p: &BqpProblem, state: &mut AdmmState, gamma: f64) -> f64 {
    let [_, _, r3, r4] = state.rho;
    let mut change = 0.0;
    if p.n_inequalities() > 0 {
        let gap = p.inequality_gap(&state.x);
        for j in 0..gap.len() {
            state.z3[j] = (-gap[j] - state.y4[j] / r4).max(0.0);
        }
        for j in 0..gap.len() {
            let step = gamma * r4 * (gap[j] + state.z3[j]);
            state.y4[j] += step;
            change += step * step;
        }
    }
    if p.n_equalities() > 0 {
        let gap = p.equality_gap(&state.x);
        for (y, g) in state.y3.iter_mut().zip(gap) {
            let step = gamma * r3 * g;
            *y += step;
            change += step * step;
        }
    }
    change
}

/// [`Subproblem`] wiring for a plain BQP.
pub struct BqpSubproblem<'a> {
    problem: &'a BqpProblem,
    pcg: PcgSettings,
}

impl<'a> BqpSubproblem<'a> {
    pub fn new(problem: &'a BqpProblem, params: &AdmmParams) -> Self {
        Self {
            problem,
            pcg: pcg_settings(problem.dim(), params),
        }
    }
}

pub(crate) fn pcg_settings(n: usize, params: &AdmmParams) -> PcgSettings {
    PcgSettings {
        rel_tolerance: params.pcg_tol,
        ..PcgSettings::for_dimension(n)
    }
}

impl Subproblem for BqpSubproblem<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn update_x(&mut self, state: &AdmmState) -> Result<XUpdate> {
        x_update_with(self.problem, state, &self.pcg, None)
    }

    fn update_constraint_block(&mut self, state: &mut AdmmState, gamma: f64) -> f64 {
        bqp_slack_dual_update(self.problem, state, gamma)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.problem.objective(x)
    }

    fn constraint_residuals(&self, x: &[f64]) -> (f64, f64) {
        self.problem.constraint_residuals(x)
    }
}

/// Initial state for a BQP: `z3` starts at the slack `max(d2 − C2x0, 0)`.
pub fn initial_state(p: &BqpProblem, x0: &[f64], params: &AdmmParams) -> Result<AdmmState> {
    check_len("x0", p.dim(), x0.len())?;
    let mut state = AdmmState::initial(x0, p.n_equalities(), p.n_inequalities(), params);
    for (z, g) in state.z3.iter_mut().zip(p.inequality_gap(x0)) {
        *z = (-g).max(0.0);
    }
    Ok(state)
}

/// Threshold rounding at ½. Values within `tie_tol` below ½ count as ties
/// and round up.
pub fn round_half_up(x: &[f64], tie_tol: f64) -> Vec<u8> {
    x.iter().map(|&v| u8::from(v >= 0.5 - tie_tol)).collect()
}

pub(crate) fn finish(
    p: &BqpProblem,
    outcome: AdmmOutcome,
    relaxation: Relaxation,
    params: &AdmmParams,
) -> SolveResult {
    let x = &outcome.state.x;
    // iterates are only accurate to the stopping tolerance
    let round = || round_half_up(x, params.stop_tol);
    let x_bin = match relaxation {
        Relaxation::BoxSphere if outcome.converged => {
            binarize(x, params.binarize_tol).unwrap_or_else(|_| round())
        }
        _ => round(),
    };
    let xf: Vec<f64> = x_bin.iter().map(|&b| f64::from(b)).collect();
    let (eq_residual, ineq_residual) = p.constraint_residuals(&xf);
    let feasible = p.is_feasible(&xf, FEASIBILITY_TOL);
    let status = if !outcome.converged {
        SolveStatus::NotConverged
    } else if !feasible {
        SolveStatus::InfeasibleRounding
    } else {
        SolveStatus::Converged
    };
    SolveResult {
        objective: p.reported_objective(&xf),
        binariness: binariness(x),
        x: x_bin,
        relaxed: outcome.state.x,
        eq_residual,
        ineq_residual,
        feasible,
        status,
        iterations: outcome.state.k,
        trace: outcome.trace,
    }
}

/// Box/sphere ADMM on a BQP starting from `x0`.
pub fn solve_bqp(p: &BqpProblem, params: &AdmmParams, x0: &[f64]) -> Result<SolveResult> {
    p.validate()?;
    let init = initial_state(p, x0, params)?;
    let mut sub = BqpSubproblem::new(p, params);
    let outcome = admm_run(&mut sub, params, init, Relaxation::BoxSphere)?;
    Ok(finish(p, outcome, Relaxation::BoxSphere, params))
}

/// The convex box relaxation solved by the same machinery, rounded at ½.
/// Requires `A ⪰ 0`.
pub fn solve_lp_relaxation(p: &BqpProblem, params: &AdmmParams, x0: &[f64]) -> Result<SolveResult> {
    p.validate()?;
    let init = initial_state(p, x0, params)?;
    let mut sub = BqpSubproblem::new(p, params);
    let outcome = admm_run(&mut sub, params, init, Relaxation::BoxOnly)?;
    Ok(finish(p, outcome, Relaxation::BoxOnly, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn binary_points(n: usize) -> impl Iterator<Item = Vec<f64>> {
        (0..1u32 << n).map(move |mask| (0..n).map(|i| f64::from((mask >> i) & 1)).collect())
    }

    #[test]
    fn make_psd_examples() {
        let m = dense(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let (a, b) = make_psd(&m, &[0.0, 0.0], 2.0).unwrap();
        assert_eq!(a.to_dense(), vec![vec![2.0, 2.0], vec![2.0, 2.0]]);
        assert_eq!(b, vec![-2.0, -2.0]);
        let before = BqpProblem::new(m.clone(), vec![0.0, 0.0]).unwrap();
        let after = BqpProblem::new(a, b).unwrap();
        for x in binary_points(2) {
            assert_eq!(before.objective(&x), after.objective(&x));
        }
        assert_eq!(after.objective(&[1.0, 1.0]), 4.0);

        let (a0, b0) = make_psd(&m, &[1.0, -1.0], 0.0).unwrap();
        assert_eq!((a0, b0), (m.clone(), vec![1.0, -1.0]));

        let (a, b) = make_psd(&SparseMatrix::identity(2), &[1.0, 1.0], 3.0).unwrap();
        assert_eq!(a.to_dense(), vec![vec![4.0, 0.0], vec![0.0, 4.0]]);
        assert_eq!(b, vec![-2.0, -2.0]);
        let p = BqpProblem::new(a, b).unwrap();
        assert_eq!(p.objective(&[1.0, 0.0]), 2.0);
    }

    #[test]
    fn make_psd_rejects_asymmetric() {
        let m = dense(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            make_psd(&m, &[0.0, 0.0], 1.0),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(make_psd(&SparseMatrix::identity(2), &[0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let p = BqpProblem::new(SparseMatrix::zeros(2, 2), vec![1.0, 2.0]).unwrap();
        assert_eq!(bqp_objective(&p, &[1.0, 1.0]).unwrap(), 3.0);
        let p = BqpProblem::new(SparseMatrix::identity(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(bqp_objective(&p, &[1.0, 1.0]).unwrap(), 2.0);
        let p = BqpProblem::new(dense(&[&[2.0, 2.0], &[2.0, 2.0]]), vec![-2.0, -2.0]).unwrap();
        assert_eq!(bqp_objective(&p, &[0.0, 1.0]).unwrap(), 0.0);
        assert!(bqp_objective(&p, &[0.0]).is_err());
    }

    #[test]
    fn original_objective_undoes_shift_off_the_cube() {
        let m = dense(&[&[0.0, 1.0], &[1.0, -1.0]]);
        let p = BqpProblem::new(m.clone(), vec![0.5, 0.0]).unwrap();
        let q = p.clone().with_psd_shift(3.0).unwrap();
        let x = [0.3, 0.8];
        assert!((q.original_objective(&x) - p.objective(&x)).abs() < 1e-14);
        assert_eq!(q.psd_shift, 3.0);
    }

    fn state_for(p: &BqpProblem, z1: &[f64], z2: &[f64], rho: [f64; 4]) -> AdmmState {
        let mut s = AdmmState::initial(
            &vec![0.0; p.dim()],
            p.n_equalities(),
            p.n_inequalities(),
            &AdmmParams::default(),
        );
        s.z1 = z1.to_vec();
        s.z2 = z2.to_vec();
        s.rho = rho;
        s
    }

    #[test]
    fn x_update_examples() {
        let pcg = PcgSettings::for_dimension(2);
        let p = BqpProblem::new(SparseMatrix::zeros(2, 2), vec![0.0, 0.0]).unwrap();
        let s = state_for(&p, &[1.0, 0.0], &[1.0, 0.0], [1.0; 4]);
        let u = bqp_x_update(&p, &s, &pcg).unwrap();
        assert!((u.x[0] - 1.0).abs() < 1e-12 && u.x[1].abs() < 1e-12);

        let p = BqpProblem::new(SparseMatrix::identity(2), vec![0.0, 0.0]).unwrap();
        let s = state_for(&p, &[0.0, 0.0], &[0.0, 0.0], [1.0; 4]);
        assert_eq!(bqp_x_update(&p, &s, &pcg).unwrap().x, vec![0.0, 0.0]);

        let p = BqpProblem::new(SparseMatrix::zeros(2, 2), vec![-2.0, 0.0]).unwrap();
        let s = state_for(&p, &[0.0, 0.0], &[0.0, 0.0], [1.0; 4]);
        let u = bqp_x_update(&p, &s, &pcg).unwrap();
        assert!((u.x[0] - 1.0).abs() < 1e-12 && u.x[1].abs() < 1e-12);
    }

    #[test]
    fn x_update_requires_positive_box_sphere_penalty() {
        let p = BqpProblem::new(SparseMatrix::identity(2), vec![0.0, 0.0]).unwrap();
        let s = state_for(&p, &[0.0, 0.0], &[0.0, 0.0], [0.0, 0.0, 1.0, 1.0]);
        assert!(bqp_x_update(&p, &s, &PcgSettings::for_dimension(2)).is_err());
    }

    fn one_inequality(d2: f64) -> BqpProblem {
        BqpProblem::new(SparseMatrix::zeros(1, 1), vec![0.0])
            .unwrap()
            .with_inequalities(dense(&[&[1.0]]), vec![d2])
            .unwrap()
    }

    #[test]
    fn slack_update_active_constraint() {
        let p = one_inequality(1.0);
        let mut s = state_for(&p, &[0.0], &[0.0], [1.0; 4]);
        s.x = vec![1.0];
        bqp_slack_dual_update(&p, &mut s, 0.9);
        assert_eq!(s.z3, vec![0.0]);
        assert_eq!(s.y4, vec![0.0]);
    }

    #[test]
    fn slack_absorbs_gap() {
        let p = one_inequality(1.0);
        let mut s = state_for(&p, &[0.0], &[0.0], [1.0; 4]);
        s.x = vec![0.0];
        bqp_slack_dual_update(&p, &mut s, 0.9);
        assert_eq!(s.z3, vec![1.0]);
        assert_eq!(s.y4, vec![0.0]);
    }

    #[test]
    fn violation_pushes_dual_up() {
        let p = one_inequality(0.0);
        let mut s = state_for(&p, &[0.0], &[0.0], [1.0; 4]);
        s.x = vec![1.0];
        bqp_slack_dual_update(&p, &mut s, 0.5);
        assert_eq!(s.z3, vec![0.0]);
        assert_eq!(s.y4, vec![0.5]);
    }

    #[test]
    fn equality_dual_ascent() {
        let p = BqpProblem::new(SparseMatrix::zeros(2, 2), vec![0.0; 2])
            .unwrap()
            .with_equalities(dense(&[&[1.0, 1.0]]), vec![1.0])
            .unwrap();
        let mut s = state_for(&p, &[0.0; 2], &[0.0; 2], [1.0, 1.0, 2.0, 1.0]);
        s.x = vec![1.0, 1.0];
        let change = bqp_slack_dual_update(&p, &mut s, 0.5);
        assert_eq!(s.y3, vec![1.0]);
        assert_eq!(change, 1.0);
    }

    #[test]
    fn round_half_up_breaks_ties_upward() {
        assert_eq!(
            round_half_up(&[0.5, 0.4999999999, 0.49, 0.51, 0.49999], 1e-9),
            vec![1, 1, 0, 1, 0]
        );
    }

    #[test]
    fn validate_catches_shape_errors() {
        assert!(BqpProblem::new(SparseMatrix::identity(2), vec![0.0]).is_err());
        let p = BqpProblem::new(SparseMatrix::identity(2), vec![0.0; 2]).unwrap();
        assert!(p
            .clone()
            .with_equalities(SparseMatrix::identity(3), vec![0.0; 3])
            .is_err());
        assert!(p
            .with_inequalities(SparseMatrix::identity(2), vec![0.0])
            .is_err());
        assert!(BqpProblem::new(dense(&[&[0.0, 1.0], &[0.0, 0.0]]), vec![0.0; 2]).is_err());
    }

    #[test]
    fn kron_quadratic_materializes() {
        let l = dense(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let q = Quadratic::KronIdentity {
            blocks: 2,
            block: l,
        };
        let full = q.to_sparse();
        assert_eq!(full.n_rows(), 4);
        assert_eq!(full.get(2, 3), -1.0);
        assert_eq!(full.get(1, 2), 0.0);
        assert_eq!(q.diagonal(), vec![1.0; 4]);
        let x = [0.3, -0.2, 1.0, 0.5];
        assert!((q.quad_form(&x) - Quadratic::Sparse(full).quad_form(&x)).abs() < 1e-15);
    }
}
