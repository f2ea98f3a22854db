use crate::bqp::{BqpProblem, Quadratic, SYMMETRY_TOL};
use crate::error::{check_len, Error, Result};
use crate::linalg::SparseMatrix;

/// Pairwise Potts MRF over `n_nodes` nodes with `n_states` labels.
///
/// Indicator vectors are stacked state by state: variable `k·n_nodes + i` is 1
/// when node `i` takes state `k`. `unary` uses the same ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct MrfInstance {
    pub n_nodes: usize,
    pub n_states: usize,
    /// Symmetric, nonnegative node similarities with zero diagonal.
    pub w: SparseMatrix,
    pub unary: Vec<f64>,
    /// Additional `C x = d` rows (hard labels, cardinality), in the stacked ordering.
    pub extra_equalities: Vec<(SparseMatrix, Vec<f64>)>,
}

impl MrfInstance {
    pub fn new(n_states: usize, w: SparseMatrix, unary: Vec<f64>) -> Result<Self> {
        let inst = Self {
            n_nodes: w.n_rows(),
            n_states,
            w,
            unary,
            extra_equalities: Vec::new(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::InvalidInstance(
                "MRF needs at least one state".into(),
            ));
        }
        check_len("MRF similarity rows", self.n_nodes, self.w.n_rows())?;
        self.w.check_symmetric(SYMMETRY_TOL)?;
        check_len(
            "MRF unary costs",
            self.n_nodes * self.n_states,
            self.unary.len(),
        )?;
        if let Some((r, c, v)) = self
            .w
            .triplets()
            .find(|&(r, c, v)| v < 0.0 || (r == c && v != 0.0))
        {
            return Err(Error::InvalidInstance(format!(
                "MRF similarity W[{r}][{c}] = {v}: weights must be nonnegative with zero diagonal"
            )));
        }
        for (c, d) in &self.extra_equalities {
            check_len("extra equality columns", self.dim(), c.n_cols())?;
            check_len("extra equality rhs", c.n_rows(), d.len())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n_nodes * self.n_states
    }

    pub fn var(&self, node: usize, state: usize) -> usize {
        state * self.n_nodes + node
    }

    /// `Σ_{i,j} W_ij·[l_i ≠ l_j] + Σ_i unary(i, l_i)`, summing over ordered pairs.
    pub fn energy(&self, labels: &[usize]) -> f64 {
        let pair: f64 = self
            .w
            .triplets()
            .filter(|&(i, j, _)| labels[i] != labels[j])
            .map(|(_, _, v)| v)
            .sum();
        let unary: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| self.unary[self.var(i, l)])
            .sum();
        pair + unary
    }

    /// One-hot encoding of a labeling.
    pub fn encode(&self, labels: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (i, &l) in labels.iter().enumerate() {
            x[self.var(i, l)] = 1.0;
        }
        x
    }
}

/// Unnormalized graph Laplacian `D − W`.
pub fn laplacian(w: &SparseMatrix) -> SparseMatrix {
    let degrees = w.row_sums();
    w.scaled(-1.0)
        .add_diagonal(&degrees)
        .expect("similarity matrices are square")
}

/// `min xᵀ(I_K ⊗ L)x + dᵀx  s.t. each node takes exactly one state`.
pub fn build_mrf(inst: &MrfInstance) -> Result<BqpProblem> {
    inst.validate()?;
    let (n, k) = (inst.n_nodes, inst.n_states);
    let a = Quadratic::KronIdentity {
        blocks: k,
        block: laplacian(&inst.w),
    };
    let one_state = SparseMatrix::from_triplets(
        n,
        n * k,
        (0..n).flat_map(|i| (0..k).map(move |s| (i, s * n + i, 1.0))),
    )?;
    let mut p = BqpProblem::new(a, inst.unary.clone())?.with_equalities(one_state, vec![1.0; n])?;
    for (c, d) in &inst.extra_equalities {
        p = p.with_equalities(c.clone(), d.clone())?;
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbourhood {
    Four,
    /// Four plus diagonals.
    Eight,
}

/// Grid similarity matrix over row-major pixels with weights `weight(i, j)`.
pub fn grid_similarity(
    rows: usize,
    cols: usize,
    neighbourhood: Neighbourhood,
    mut weight: impl FnMut(usize, usize) -> f64,
) -> SparseMatrix {
    let mut offsets = vec![(0, 1), (1, 0)];
    if neighbourhood == Neighbourhood::Eight {
        offsets.extend([(1, 1), (1, -1)]);
    }
    let mut triplets = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            for &(dr, dc) in &offsets {
                let (r2, c2) = (r + dr, c as isize + dc);
                if r2 >= rows || c2 < 0 || c2 as usize >= cols {
                    continue;
                }
                let (a, b) = (r * cols + c, r2 * cols + c2 as usize);
                let w = weight(a, b);
                triplets.push((a, b, w));
                triplets.push((b, a, w));
            }
        }
    }
    SparseMatrix::from_triplets(rows * cols, rows * cols, triplets).expect("grid indices in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_nodes(w12: f64, unary: Vec<f64>) -> MrfInstance {
        let w = SparseMatrix::from_triplets(2, 2, vec![(0, 1, w12), (1, 0, w12)]).unwrap();
        MrfInstance::new(2, w, unary).unwrap()
    }

    #[test]
    fn pair_energies() {
        let inst = two_nodes(1.0, vec![0.0; 4]);
        let p = build_mrf(&inst).unwrap();
        for (labels, expected) in [([0, 0], 0.0), ([1, 1], 0.0), ([0, 1], 2.0), ([1, 0], 2.0)] {
            let x = inst.encode(&labels);
            assert_eq!(p.objective(&x), expected);
            assert_eq!(inst.energy(&labels), expected);
            assert!(p.is_feasible(&x, 0.0));
        }
    }

    #[test]
    fn zero_similarity_gives_zero_quadratic() {
        let inst = two_nodes(0.0, vec![1.0, 2.0, 3.0, 0.5]);
        let p = build_mrf(&inst).unwrap();
        assert!(p.a.to_sparse().values().iter().all(|&v| v == 0.0));
        assert_eq!(p.objective(&inst.encode(&[0, 1])), 1.5);
    }

    #[test]
    fn single_node_picks_cheapest_state() {
        let inst = MrfInstance::new(3, SparseMatrix::zeros(1, 1), vec![3.0, 1.0, 2.0]).unwrap();
        let p = build_mrf(&inst).unwrap();
        let best = (0..3)
            .min_by(|&a, &b| {
                p.objective(&inst.encode(&[a]))
                    .total_cmp(&p.objective(&inst.encode(&[b])))
            })
            .unwrap();
        assert_eq!(best, 1);
        assert_eq!(p.objective(&inst.encode(&[1])), 1.0);
    }

    #[test]
    fn rejects_bad_similarities() {
        let neg = SparseMatrix::from_triplets(2, 2, vec![(0, 1, -1.0), (1, 0, -1.0)]).unwrap();
        assert!(MrfInstance::new(2, neg, vec![0.0; 4]).is_err());
        let asym = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0)]).unwrap();
        assert!(MrfInstance::new(2, asym, vec![0.0; 4]).is_err());
        let diag = SparseMatrix::identity(2);
        assert!(MrfInstance::new(2, diag, vec![0.0; 4]).is_err());
        assert!(MrfInstance::new(2, SparseMatrix::zeros(2, 2), vec![0.0; 3]).is_err());
    }

    #[test]
    fn extra_equalities_are_appended() {
        let mut inst = two_nodes(1.0, vec![0.0; 4]);
        // node 0 fixed to state 1
        let hard = SparseMatrix::from_triplets(1, 4, vec![(0, inst.var(0, 1), 1.0)]).unwrap();
        inst.extra_equalities.push((hard, vec![1.0]));
        let p = build_mrf(&inst).unwrap();
        assert_eq!(p.n_equalities(), 3);
        assert!(!p.is_feasible(&inst.encode(&[0, 0]), 0.0));
        assert!(p.is_feasible(&inst.encode(&[1, 0]), 0.0));
    }

    #[test]
    fn grid_neighbourhoods() {
        let w = grid_similarity(2, 3, Neighbourhood::Four, |_, _| 1.0);
        // 2 rows × 2 horizontal + 3 vertical = 7 edges, stored both ways
        assert_eq!(w.nnz(), 14);
        assert!(w.check_symmetric(0.0).is_ok());
        assert_eq!(w.get(0, 3), 1.0);
        assert_eq!(w.get(2, 3), 0.0);
        // plus 2 × 2 diagonals
        let w8 = grid_similarity(2, 3, Neighbourhood::Eight, |_, _| 1.0);
        assert_eq!(w8.nnz(), 22);
        assert_eq!(w8.get(0, 4), 1.0);
        assert_eq!(w8.get(2, 4), 1.0);
        assert_eq!(w8.get(0, 5), 0.0);
    }
}
