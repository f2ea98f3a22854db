use log::warn;
use rand::Rng;

use crate::admm::AdmmParams;
use crate::bqp::{psd_shift_bound, BqpProblem, ObjectiveReport, Quadratic, SYMMETRY_TOL};
use crate::error::{check_len, Error, Result};
use crate::linalg::SparseMatrix;

/// Distance substituted for coincident points before taking the log.
pub const DUPLICATE_EPSILON: f64 = 1e-8;

/// Equal-size clustering `min tr(YᵀWY)` over `N×K` membership matrices.
///
/// `y = vec(Y)` is column-major: variable `k·N + i` is 1 when instance `i`
/// belongs to cluster `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringInstance {
    pub n: usize,
    pub k: usize,
    pub features: Option<Vec<Vec<f64>>>,
    /// `W_ij = log ‖r_i − r_j‖²` off the diagonal, zero on it.
    pub w: SparseMatrix,
}

impl ClusteringInstance {
    /// Computes `W` from feature rows.
    pub fn from_features(features: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        let n = features.len();
        let dim = features.first().map_or(0, Vec::len);
        for row in &features {
            check_len("feature row", dim, row.len())?;
        }
        let mut triplets = Vec::with_capacity(n * n);
        let mut duplicates = 0usize;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut d2: f64 = features[i]
                    .iter()
                    .zip(&features[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 == 0.0 {
                    duplicates += 1;
                    d2 = DUPLICATE_EPSILON * DUPLICATE_EPSILON;
                }
                triplets.push((i, j, d2.ln()));
            }
        }
        if duplicates > 0 {
            warn!(
                "{} coincident point pairs; using log({DUPLICATE_EPSILON:e}²) for their similarity",
                duplicates / 2
            );
        }
        let w = SparseMatrix::from_triplets(n, n, triplets)?;
        let inst = Self {
            n,
            k,
            features: Some(features),
            w,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_similarity(w: SparseMatrix, k: usize) -> Result<Self> {
        let inst = Self {
            n: w.n_rows(),
            k,
            features: None,
            w,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || !self.n.is_multiple_of(self.k) {
            return Err(Error::InvalidInstance(format!(
                "K = {} must divide N = {} for equal-size clusters",
                self.k, self.n
            )));
        }
        check_len("clustering similarity rows", self.n, self.w.n_rows())?;
        self.w.check_symmetric(SYMMETRY_TOL)?;
        if self.w.diagonal().iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidInstance(
                "similarity diagonal must be zero".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n * self.k
    }

    pub fn cluster_size(&self) -> usize {
        self.n / self.k
    }

    pub fn var(&self, instance: usize, cluster: usize) -> usize {
        cluster * self.n + instance
    }

    /// `tr(YᵀWY) = Σ_{i,j in the same cluster} W_ij`.
    pub fn objective(&self, labels: &[usize]) -> f64 {
        self.w
            .triplets()
            .filter(|&(i, j, _)| labels[i] == labels[j])
            .map(|(_, _, v)| v)
            .sum()
    }

    pub fn encode(&self, labels: &[usize]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for (i, &l) in labels.iter().enumerate() {
            y[self.var(i, l)] = 1.0;
        }
        y
    }

    pub fn total_similarity(&self) -> f64 {
        self.w.values().iter().sum()
    }
}

/// `L = D + W` with `d_i = −Σ_j W_ij`.
pub fn signed_laplacian(w: &SparseMatrix) -> SparseMatrix {
    let d: Vec<f64> = w.row_sums().iter().map(|s| -s).collect();
    w.add_diagonal(&d).expect("similarity matrices are square")
}

/// `min yᵀ(I_K ⊗ L)y  s.t. equal cluster sizes, one cluster per instance`.
///
/// `L` is positive semidefinite only when every `W_ij ≤ 0` (all pairwise
/// distances below 1). Otherwise the smallest safe diagonal shift is applied,
/// which leaves binary objectives unchanged. The reported objective adds back
/// `Σ W_ij` so it equals `tr(YᵀWY)` on feasible `y`.
pub fn build_clustering(inst: &ClusteringInstance) -> Result<BqpProblem> {
    inst.validate()?;
    let (n, k) = (inst.n, inst.k);
    let block = signed_laplacian(&inst.w);
    let alpha = psd_shift_bound(&block);
    let sizes = (0..k).flat_map(|c| (0..n).map(move |i| (c, c * n + i, 1.0)));
    let memberships = (0..n).flat_map(|i| (0..k).map(move |c| (k + i, c * n + i, 1.0)));
    let c1 = SparseMatrix::from_triplets(k + n, n * k, sizes.chain(memberships))?;
    let mut d1 = vec![inst.cluster_size() as f64; k];
    d1.extend(std::iter::repeat_n(1.0, n));
    BqpProblem::new(
        Quadratic::KronIdentity { blocks: k, block },
        vec![0.0; n * k],
    )?
    .with_equalities(c1, d1)?
    .with_report(ObjectiveReport {
        sign: 1.0,
        offset: inst.total_similarity(),
    })
    .with_psd_shift(alpha)
}

/// Initial penalty on the order of the similarity Laplacian's diagonal.
///
/// The box relaxation of this problem is minimized by the uninformative
/// `Y = 1/K`, so with a tiny initial penalty the first x-update lands there
/// and discards the initialization. Starting near the scale of `L` keeps the
/// iterates anchored to the K-means start.
pub const CLUSTERING_RHO_INIT: f64 = 30.0;

pub fn clustering_params() -> AdmmParams {
    AdmmParams {
        rho_init: [CLUSTERING_RHO_INIT; 4],
        ..AdmmParams::default()
    }
}

/// Lloyd's algorithm with k-means++ seeding. Returns a label per row.
pub fn kmeans<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    k: usize,
    max_iterations: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = features.len();
    if n == 0 || k == 0 {
        return vec![0; n];
    }
    let dist2 =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };

    let mut centers: Vec<Vec<f64>> = vec![features[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let weights: Vec<f64> = features
            .iter()
            .map(|f| {
                centers
                    .iter()
                    .map(|c| dist2(f, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            weights
                .iter()
                .position(|&w| {
                    t -= w;
                    t <= 0.0
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centers.push(features[pick].clone());
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iterations.max(1) {
        let mut changed = false;
        for (i, f) in features.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| dist2(f, &centers[a]).total_cmp(&dist2(f, &centers[b])))
                .expect("k >= 1");
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = features[0].len();
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = features
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(f, _)| f)
                .collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..dim {
                center[d] = members.iter().map(|f| f[d]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_pairs() -> ClusteringInstance {
        ClusteringInstance::from_features(
            vec![
                vec![0.0, 0.0],
                vec![0.05, 0.0],
                vec![0.6, 0.6],
                vec![0.62, 0.6],
            ],
            2,
        )
        .unwrap()
    }

    #[test]
    fn similarity_from_features() {
        let inst = two_pairs();
        assert_eq!(inst.w.get(0, 0), 0.0);
        assert!((inst.w.get(0, 1) - (0.05f64 * 0.05).ln()).abs() < 1e-12);
        assert!(inst.w.check_symmetric(0.0).is_ok());
    }

    #[test]
    fn duplicates_use_epsilon() {
        let inst = ClusteringInstance::from_features(vec![vec![1.0], vec![1.0]], 2).unwrap();
        assert!((inst.w.get(0, 1) - (1e-16f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn k_must_divide_n() {
        let f = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            ClusteringInstance::from_features(f, 2),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn offset_identity_on_feasible_points() {
        let inst = two_pairs();
        let p = build_clustering(&inst).unwrap();
        let total = inst.total_similarity();
        for labels in [[0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0], [1, 1, 0, 0]] {
            let y = inst.encode(&labels);
            assert!(p.is_feasible(&y, 0.0));
            let quad = p.original_objective(&y);
            assert!((quad - inst.objective(&labels) + total).abs() < 1e-12);
            assert!((p.reported_objective(&y) - inst.objective(&labels)).abs() < 1e-12);
        }
    }

    #[test]
    fn groups_separated_pairs() {
        let inst = two_pairs();
        let best = [[0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0]]
            .into_iter()
            .min_by(|a, b| inst.objective(a).total_cmp(&inst.objective(b)))
            .unwrap();
        assert_eq!(best, [0, 0, 1, 1]);
    }

    #[test]
    fn zero_similarity_is_flat() {
        let inst = ClusteringInstance::from_similarity(SparseMatrix::zeros(4, 4), 2).unwrap();
        let p = build_clustering(&inst).unwrap();
        assert_eq!(p.psd_shift, 0.0);
        for labels in [[0, 0, 1, 1], [1, 0, 1, 0]] {
            assert_eq!(p.reported_objective(&inst.encode(&labels)), 0.0);
        }
    }

    #[test]
    fn far_points_trigger_a_shift() {
        let inst = ClusteringInstance::from_features(
            vec![vec![0.0], vec![10.0], vec![20.0], vec![30.0]],
            2,
        )
        .unwrap();
        let p = build_clustering(&inst).unwrap();
        assert!(p.psd_shift > 0.0);
        let y = inst.encode(&[0, 1, 0, 1]);
        assert!((p.reported_objective(&y) - inst.objective(&[0, 1, 0, 1])).abs() < 1e-9);
    }

    #[test]
    fn kmeans_separates_blobs() {
        let f = vec![vec![0.0], vec![0.1], vec![5.0], vec![5.1]];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = kmeans(&f, 2, 50, &mut rng);
        assert_eq!(l[0], l[1]);
        assert_eq!(l[2], l[3]);
        assert_ne!(l[0], l[2]);
    }
}
