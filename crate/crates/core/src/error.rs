use std::path::PathBuf;

use thiserror::Error;

use crate::admm::AdmmState;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid sparse matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not symmetric (max |M - M^T| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("NaN input at index {index}")]
    NanInput { index: usize },

    #[error("only the p = 2 sphere is supported, got p = {0}")]
    UnsupportedSphere(f64),

    #[error("conjugate gradient breakdown at iteration {iteration}: {reason}")]
    PcgBreakdown { iteration: usize, reason: String },

    #[error("x-update at ADMM iteration {k} did not converge: {iterations} PCG iterations, relative residual {relative_residual:e}")]
    SubproblemNotConverged {
        k: usize,
        iterations: usize,
        relative_residual: f64,
    },

    #[error("non-finite value in `{variable}` at ADMM iteration {k}")]
    NonFinite {
        k: usize,
        variable: &'static str,
        state: Box<AdmmState>,
    },

    #[error("component {index} = {value} is farther than {tol} from both 0 and 1")]
    NotBinary { index: usize, value: f64, tol: f64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("problem size {n} exceeds the enumeration limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
