//! Exhaustive solvers used as ground truth. Deliberately naive.

use serde::{Deserialize, Serialize};

use crate::bqp::BqpProblem;
use crate::error::{Error, Result};
use crate::l1ext::L1Problem;
use crate::linalg::spmv;
use crate::problems::{ClusteringInstance, MatchingInstance, MrfInstance};

pub const DEFAULT_BQP_LIMIT: usize = 20;
pub const DEFAULT_MATCHING_LIMIT: usize = 7;
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1_000_000;
/// Absolute tolerance on `C1x = d1` and `C2x ≤ d2`.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// Objectives within `TIE_TOL·max(1, |best|)` of the best count as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// First optimum in enumeration order; empty when nothing is feasible.
    pub best_x: Vec<u8>,
    /// `+∞` when nothing is feasible.
    pub best_objective: f64,
    pub n_feasible: u64,
    pub all_optima: Vec<Vec<u8>>,
}

impl OracleResult {
    pub fn is_empty(&self) -> bool {
        self.n_feasible == 0
    }
}

/// Tracks the best value and its ties, minimizing.
struct Best {
    value: f64,
    optima: Vec<Vec<u8>>,
    feasible: u64,
}

impl Best {
    fn new() -> Self {
        Self {
            value: f64::INFINITY,
            optima: Vec::new(),
            feasible: 0,
        }
    }

    fn offer(&mut self, value: f64, x: impl FnOnce() -> Vec<u8>) {
        self.feasible += 1;
        let slack = TIE_TOL * self.value.abs().max(1.0);
        if self.optima.is_empty() || value < self.value - slack {
            self.value = value;
            self.optima.clear();
            self.optima.push(x());
        } else if value <= self.value + slack {
            self.optima.push(x());
        }
    }

    fn finish(self, sign: f64) -> OracleResult {
        OracleResult {
            best_x: self.optima.first().cloned().unwrap_or_default(),
            best_objective: sign * self.value,
            n_feasible: self.feasible,
            all_optima: self.optima,
        }
    }
}

/// Calls `visit` on every vector of `{0..base}^len` in lexicographic order.
fn for_each_word(len: usize, base: usize, mut visit: impl FnMut(&[usize])) {
    let mut word = vec![0usize; len];
    loop {
        visit(&word);
        let mut pos = len;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            word[pos] += 1;
            if word[pos] < base {
                break;
            }
            word[pos] = 0;
        }
    }
}

fn check_enumeration(count: Option<u64>, limit: u64, what: &str) -> Result<()> {
    match count {
        Some(c) if c <= limit => Ok(()),
        _ => Err(Error::InvalidInstance(format!(
            "{what} enumeration exceeds the limit of {limit} candidates"
        ))),
    }
}

/// Minimizes `xᵀAx + bᵀx` over all binary `x` with `C1x = d1`, `C2x ≤ d2`.
pub fn brute_force_bqp(p: &BqpProblem, n_limit: usize) -> Result<OracleResult> {
    p.validate()?;
    let n = p.dim();
    if n > n_limit {
        return Err(Error::TooLarge { n, limit: n_limit });
    }
    let mut best = Best::new();
    let mut x = vec![0.0; n];
    for_each_word(n, 2, |w| {
        for (xi, &wi) in x.iter_mut().zip(w) {
            *xi = wi as f64;
        }
        if p.is_feasible(&x, CONSTRAINT_TOL) {
            best.offer(p.original_objective(&x), || {
                w.iter().map(|&v| v as u8).collect()
            });
        }
    });
    Ok(best.finish(1.0))
}

/// Maximizes `xᵀMx` over partial one-to-one assignments.
pub fn brute_force_matching(inst: &MatchingInstance, limit: usize) -> Result<OracleResult> {
    let (n1, n2) = (inst.n1, inst.n2);
    if n1.max(n2) > limit {
        return Err(Error::TooLarge {
            n: n1.max(n2),
            limit,
        });
    }
    // word[i] = 0 leaves node i unmatched, a + 1 matches it to a
    let mut best = Best::new();
    let mut used = vec![false; n2];
    for_each_word(n1, n2 + 1, |w| {
        used.iter_mut().for_each(|u| *u = false);
        for &c in w.iter().filter(|&&c| c > 0) {
            if std::mem::replace(&mut used[c - 1], true) {
                return;
            }
        }
        let pairs: Vec<(usize, usize)> = w
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c - 1))
            .collect();
        let x = inst.encode(&pairs);
        best.offer(-inst.score(&x), || x.iter().map(|&v| v as u8).collect());
    });
    Ok(best.finish(-1.0))
}

/// Minimizes `tr(YᵀWY)` over equal-size assignments. `best_x` is `vec(Y)`.
pub fn brute_force_clustering(inst: &ClusteringInstance, limit: u64) -> Result<OracleResult> {
    inst.validate()?;
    check_enumeration(
        (inst.k as u64).checked_pow(inst.n as u32),
        limit,
        "clustering",
    )?;
    let size = inst.cluster_size();
    let mut best = Best::new();
    let mut counts = vec![0usize; inst.k];
    for_each_word(inst.n, inst.k, |labels| {
        counts.iter_mut().for_each(|c| *c = 0);
        labels.iter().for_each(|&l| counts[l] += 1);
        if counts.iter().all(|&c| c == size) {
            best.offer(inst.objective(labels), || {
                inst.encode(labels).iter().map(|&v| v as u8).collect()
            });
        }
    });
    Ok(best.finish(1.0))
}

/// Minimizes the Potts energy over all labelings satisfying the extra equalities.
pub fn brute_force_mrf(inst: &MrfInstance, limit: u64) -> Result<OracleResult> {
    inst.validate()?;
    check_enumeration(
        (inst.n_states as u64).checked_pow(inst.n_nodes as u32),
        limit,
        "MRF",
    )?;
    let mut best = Best::new();
    for_each_word(inst.n_nodes, inst.n_states, |labels| {
        let x = inst.encode(labels);
        let ok = inst.extra_equalities.iter().all(|(c, d)| {
            spmv(c, &x)
                .expect("validated shapes")
                .iter()
                .zip(d)
                .all(|(lhs, rhs)| (lhs - rhs).abs() <= CONSTRAINT_TOL)
        });
        if ok {
            best.offer(inst.energy(labels), || x.iter().map(|&v| v as u8).collect());
        }
    });
    Ok(best.finish(1.0))
}

/// Minimizes `f(x) + λ‖Cx‖₁` over feasible binary `x`, in reported units.
pub fn brute_force_l1(p: &L1Problem, n_limit: usize) -> Result<OracleResult> {
    p.validate()?;
    let n = p.base.dim();
    if n > n_limit {
        return Err(Error::TooLarge { n, limit: n_limit });
    }
    let mut best = Best::new();
    let mut x = vec![0.0; n];
    for_each_word(n, 2, |w| {
        for (xi, &wi) in x.iter_mut().zip(w) {
            *xi = wi as f64;
        }
        if p.base.is_feasible(&x, CONSTRAINT_TOL) {
            best.offer(p.objective(&x), || w.iter().map(|&v| v as u8).collect());
        }
    });
    Ok(best.finish(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;

    #[test]
    fn bqp_examples() {
        let p = BqpProblem::new(SparseMatrix::zeros(2, 2), vec![-1.0, 1.0]).unwrap();
        let r = brute_force_bqp(&p, 20).unwrap();
        assert_eq!(r.best_x, vec![1, 0]);
        assert_eq!(r.best_objective, -1.0);
        assert_eq!(r.n_feasible, 4);
        assert_eq!(r.all_optima, vec![vec![1, 0]]);

        let infeasible = BqpProblem::new(SparseMatrix::zeros(2, 2), vec![0.0; 2])
            .unwrap()
            .with_equalities(
                SparseMatrix::from_dense(&[vec![1.0, 1.0]]).unwrap(),
                vec![3.0],
            )
            .unwrap();
        let r = brute_force_bqp(&infeasible, 20).unwrap();
        assert!(r.is_empty());
        assert!(r.best_x.is_empty());

        let flat = BqpProblem::new(SparseMatrix::zeros(3, 3), vec![0.0; 3]).unwrap();
        let r = brute_force_bqp(&flat, 20).unwrap();
        assert_eq!(r.all_optima.len(), 8);
        assert_eq!(r.all_optima[1], vec![0, 0, 1]);
    }

    #[test]
    fn bqp_limit() {
        let p = BqpProblem::new(SparseMatrix::zeros(5, 5), vec![0.0; 5]).unwrap();
        assert!(matches!(
            brute_force_bqp(&p, 4),
            Err(Error::TooLarge { n: 5, limit: 4 })
        ));
    }

    #[test]
    fn matching_examples() {
        let zero = MatchingInstance::new(2, 2, SparseMatrix::zeros(4, 4)).unwrap();
        let r = brute_force_matching(&zero, 7).unwrap();
        assert_eq!(r.n_feasible, 7);
        assert_eq!(r.all_optima.len(), 7);
        assert_eq!(r.best_objective, 0.0);

        let m = SparseMatrix::from_triplets(4, 4, vec![(0, 3, 1.0), (3, 0, 1.0)]).unwrap();
        let inst = MatchingInstance::new(2, 2, m).unwrap();
        let r = brute_force_matching(&inst, 7).unwrap();
        assert_eq!(r.best_objective, 2.0);
        assert_eq!(r.all_optima, vec![vec![1, 0, 0, 1]]);

        let single = MatchingInstance::new(1, 1, SparseMatrix::zeros(1, 1)).unwrap();
        assert_eq!(
            brute_force_matching(&single, 7).unwrap().all_optima.len(),
            2
        );
        assert!(brute_force_matching(&single, 0).is_err());
    }

    #[test]
    fn clustering_counts() {
        let two = ClusteringInstance::from_similarity(SparseMatrix::zeros(2, 2), 2).unwrap();
        assert_eq!(
            brute_force_clustering(&two, 1_000_000).unwrap().n_feasible,
            2
        );
        let four = ClusteringInstance::from_similarity(SparseMatrix::zeros(4, 4), 2).unwrap();
        let r = brute_force_clustering(&four, 1_000_000).unwrap();
        assert_eq!(r.n_feasible, 6);
        assert_eq!(r.all_optima.len(), 6);
        assert_eq!(r.best_objective, 0.0);
        assert!(brute_force_clustering(&four, 15).is_err());
    }

    #[test]
    fn mrf_two_nodes() {
        let w = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let inst = MrfInstance::new(2, w, vec![0.0, 0.5, 1.0, 0.0]).unwrap();
        let r = brute_force_mrf(&inst, 100).unwrap();
        assert_eq!(r.n_feasible, 4);
        // (0,0) costs 0.5, (1,1) costs 1, split labels cost 2 plus unaries
        assert_eq!(r.best_objective, 0.5);
        assert_eq!(
            r.best_x,
            inst.encode(&[0, 0])
                .iter()
                .map(|&v| v as u8)
                .collect::<Vec<_>>()
        );
    }
}
