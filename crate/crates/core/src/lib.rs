//! Binary integer programming by ADMM over the box ∩ ℓ2-sphere reformulation
//! of `{0,1}^n`, with reductions for MRF energy minimization, graph matching,
//! and balanced clustering, and brute-force oracles for validation.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod bqp;
pub mod error;
pub mod geometry;
pub mod io;
pub mod l1ext;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod suite;
pub mod synth;

pub use admm::{
    admm_run, binarize, dual_ascent_step, AdmmOutcome, AdmmParams, AdmmState, IterationRecord,
    Relaxation, SolveResult, SolveStatus, Subproblem,
};
pub use bqp::{make_psd, solve_bqp, solve_lp_relaxation, BqpProblem, ObjectiveReport, Quadratic};
pub use error::{Error, Result};
pub use l1ext::{soft_threshold, solve_l1, L1Problem};
pub use linalg::{PcgSettings, SparseMatrix};
pub use oracle::{
    brute_force_bqp, brute_force_clustering, brute_force_matching, brute_force_mrf, OracleResult,
};
