use crate::bqp::{BqpProblem, ObjectiveReport};
use crate::error::{check_len, Error, Result};
use crate::linalg::{spmv, SparseMatrix};

use super::mrf::laplacian;

/// Graph matching `max xᵀMx  s.t. each node matched at most once`.
///
/// Variable `a·n1 + i` is 1 when node `i` of the first graph is matched to
/// node `a` of the second.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingInstance {
    pub n1: usize,
    pub n2: usize,
    /// Symmetric nonnegative affinity over candidate assignments.
    pub m: SparseMatrix,
}

impl MatchingInstance {
    /// Symmetrizes `m` as `(M + Mᵀ)/2`.
    pub fn new(n1: usize, n2: usize, m: SparseMatrix) -> Result<Self> {
        check_len("matching affinity rows", n1 * n2, m.n_rows())?;
        check_len("matching affinity cols", n1 * n2, m.n_cols())?;
        let m = m.add(&m.transpose())?.scaled(0.5);
        if let Some((r, c, v)) = m.triplets().find(|&(_, _, v)| v < 0.0) {
            return Err(Error::InvalidInstance(format!(
                "matching affinity M[{r}][{c}] = {v} is negative"
            )));
        }
        Ok(Self { n1, n2, m })
    }

    pub fn dim(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn var(&self, i: usize, a: usize) -> usize {
        a * self.n1 + i
    }

    /// `xᵀMx`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mx = spmv(&self.m, x).expect("x has n1·n2 entries");
        x.iter().zip(&mx).map(|(a, b)| a * b).sum()
    }

    pub fn encode(&self, pairs: &[(usize, usize)]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for &(i, a) in pairs {
            x[self.var(i, a)] = 1.0;
        }
        x
    }
}

/// `[1ᵀ_{n2} ⊗ I_{n1}; I_{n2} ⊗ 1ᵀ_{n1}]`: one row per node of either graph.
pub fn one_to_one_rows(n1: usize, n2: usize) -> SparseMatrix {
    let first = (0..n1).flat_map(|i| (0..n2).map(move |a| (i, a * n1 + i, 1.0)));
    let second = (0..n2).flat_map(|a| (0..n1).map(move |i| (n1 + a, a * n1 + i, 1.0)));
    SparseMatrix::from_triplets(n1 + n2, n1 * n2, first.chain(second)).expect("indices in range")
}

/// `min xᵀLx − dᵀx  s.t. C2x ≤ 1`, with `L = D − M` and `d = M·1`.
///
/// On binary `x`, `xᵀMx = −xᵀLx + dᵀx`, so the reported objective is the
/// original maximization value.
pub fn build_matching(inst: &MatchingInstance) -> Result<BqpProblem> {
    let d = inst.m.row_sums();
    let b = d.iter().map(|v| -v).collect();
    let c2 = one_to_one_rows(inst.n1, inst.n2);
    let ones = vec![1.0; c2.n_rows()];
    Ok(BqpProblem::new(laplacian(&inst.m), b)?
        .with_inequalities(c2, ones)?
        .with_report(ObjectiveReport {
            sign: -1.0,
            offset: 0.0,
        }))
}

/// Spectral matching: the leading eigenvector of `M` by power iteration,
/// discretized greedily (largest remaining entry first, skipping conflicts).
///
/// Returns the matched `(i, a)` pairs.
pub fn spectral_matching(inst: &MatchingInstance, iterations: usize) -> Vec<(usize, usize)> {
    let dim = inst.dim();
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    for _ in 0..iterations {
        // M + I keeps the iteration away from sign oscillation
        let mut w = spmv(&inst.m, &v).expect("square affinity");
        w.iter_mut().zip(&v).for_each(|(w, v)| *w += v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let (mut row_used, mut col_used) = (vec![false; inst.n1], vec![false; inst.n2]);
    let mut pairs = Vec::new();
    for idx in order {
        let (i, a) = (idx % inst.n1, idx / inst.n1);
        if v[idx] > 0.0 && !row_used[i] && !col_used[a] {
            row_used[i] = true;
            col_used[a] = true;
            pairs.push((i, a));
        }
    }
    pairs.sort_unstable();
    pairs
}
