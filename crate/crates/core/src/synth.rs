//! Seeded synthetic instances for tests, benchmarks and the CLI.
//!
//! Every generator takes its own RNG. [`rng_for`] derives one per
//! `(seed, family, index)` so instances are reproducible independently of
//! the order they are built in.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::bqp::{BqpProblem, ObjectiveReport};
use crate::error::Result;
use crate::l1ext::{first_difference, L1Problem};
use crate::linalg::SparseMatrix;
use crate::problems::{
    grid_similarity, ClusteringInstance, MatchingInstance, MrfInstance, Neighbourhood,
};

/// Independent stream for instance `index` of `family` under a master seed.
pub fn rng_for(seed: u64, family: &str, index: u64) -> ChaCha8Rng {
    // FNV-1a: stable across platforms and toolchains
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in family.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h.rotate_left(17));
    rng.set_stream(index);
    rng
}

/// A random BQP with a planted feasible point.
#[derive(Debug, Clone)]
pub struct PlantedBqp {
    pub problem: BqpProblem,
    pub planted: Vec<u8>,
}

/// Indefinite Gaussian quadratic, shifted to PSD, with `m1` equality and `m2`
/// inequality rows of small nonnegative integers. Right-hand sides are taken
/// at a random binary point so the feasible set is never empty.
pub fn random_bqp<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m1: usize,
    m2: usize,
) -> Result<PlantedBqp> {
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.sample(StandardNormal);
            triplets.push((i, j, v));
            if i != j {
                triplets.push((j, i, v));
            }
        }
    }
    let m = SparseMatrix::from_triplets(n, n, triplets)?;
    let b: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let planted: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1u8)).collect();

    let mut rows = |count: usize, max_coef: u8| -> (SparseMatrix, Vec<f64>) {
        let dense: Vec<Vec<f64>> = (0..count)
            .map(|_| {
                (0..n)
                    .map(|_| f64::from(rng.random_range(0..=max_coef)))
                    .collect()
            })
            .collect();
        let at_planted = dense
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&planted)
                    .map(|(c, &x)| c * f64::from(x))
                    .sum()
            })
            .collect();
        let m = if count == 0 {
            SparseMatrix::zeros(0, n)
        } else {
            SparseMatrix::from_dense(&dense).expect("rectangular")
        };
        (m, at_planted)
    };
    let (c1, d1) = rows(m1, 1);
    let (c2, mut d2) = rows(m2, 2);
    for d in &mut d2 {
        *d += f64::from(rng.random_range(0..=2u8));
    }
    let problem = BqpProblem::new(m, b)?
        .with_equalities(c1, d1)?
        .with_inequalities(c2, d2)?
        .shifted_to_psd()?;
    Ok(PlantedBqp { problem, planted })
}

/// Two-region segmentation MRF on a `rows × cols` image.
///
/// A random half-plane splits the image into regions of intensity 0 and 1,
/// observed with N(0, `noise`²) noise. Unaries are Gaussian negative
/// log-likelihoods `(c_i − μ_k)²/(2·noise²)`; edges join 8-neighbours with
/// `W_ij = exp(−(c_i − c_j)²)`.
pub fn segmentation_mrf<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    noise: f64,
) -> Result<MrfInstance> {
    let n = rows * cols;
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (ca, sa) = (angle.cos(), angle.sin());
    let offset: f64 = rng.random_range(-0.25..0.25);
    let jitter = Normal::new(0.0, noise).expect("noise must be positive");
    let mut intensity = vec![0.0; n];
    for r in 0..rows {
        for c in 0..cols {
            let u = (c as f64 + 0.5) / cols as f64 - 0.5;
            let v = (r as f64 + 0.5) / rows as f64 - 0.5;
            let truth = f64::from(u8::from(ca * u + sa * v > offset));
            intensity[r * cols + c] = truth + jitter.sample(rng);
        }
    }
    let mut unary = vec![0.0; 2 * n];
    for (i, &c) in intensity.iter().enumerate() {
        for k in 0..2 {
            unary[k * n + i] = (c - k as f64).powi(2) / (2.0 * noise * noise);
        }
    }
    let w = grid_similarity(rows, cols, Neighbourhood::Eight, |i, j| {
        (-(intensity[i] - intensity[j]).powi(2)).exp()
    });
    MrfInstance::new(2, w, unary)
}

/// Matching between a random 2-D point set and a shuffled, jittered copy,
/// with pairwise affinity `exp(−(d_ij − d_ab)²/σ²)` for `i ≠ j, a ≠ b`.
///
/// Returns the instance and the planted correspondence `perm[i] = a`.
pub fn point_matching<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    noise: f64,
    sigma: f64,
) -> Result<(MatchingInstance, Vec<usize>)> {
    let jitter = Normal::new(0.0, noise.max(0.0)).expect("valid std");
    let p1: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut p2 = vec![[0.0; 2]; n];
    for (i, &a) in perm.iter().enumerate() {
        p2[a] = [p1[i][0] + jitter.sample(rng), p1[i][1] + jitter.sample(rng)];
    }
    let dist = |p: &[[f64; 2]], i: usize, j: usize| (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]);
    let var = |i: usize, a: usize| a * n + i;
    let mut triplets = Vec::new();
    for i in 0..n {
        for a in 0..n {
            for j in 0..n {
                for b in 0..n {
                    if i == j || a == b {
                        continue;
                    }
                    let d = dist(&p1, i, j) - dist(&p2, a, b);
                    triplets.push((var(i, a), var(j, b), (-d * d / (sigma * sigma)).exp()));
                }
            }
        }
    }
    let m = SparseMatrix::from_triplets(n * n, n * n, triplets)?;
    Ok((MatchingInstance::new(n, n, m)?, perm))
}

/// `k` isotropic Gaussian blobs of `n/k` points each in 2-D.
///
/// Centres lie on a circle of radius `spread`; points have std `std`.
/// Keeping both small keeps pairwise distances below 1, where the
/// log-distance similarities are all negative.
pub fn gaussian_blobs<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    spread: f64,
    std: f64,
) -> Result<(ClusteringInstance, Vec<usize>)> {
    let noise = Normal::new(0.0, std).expect("std must be nonnegative");
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut features = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k.max(1);
        let t = phase + std::f64::consts::TAU * c as f64 / k.max(1) as f64;
        features.push(vec![
            spread * t.cos() + noise.sample(rng),
            spread * t.sin() + noise.sample(rng),
        ]);
        truth.push(c);
    }
    Ok((ClusteringInstance::from_features(features, k)?, truth))
}

/// 1-D binary denoising: `min ‖x − s‖² + λ‖Dx‖₁` for a noisy step `s`.
///
/// The reported objective includes the constant `‖s‖²`, so it is the true
/// squared error plus the total-variation term.
pub fn tv_chain<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    noise: f64,
    lambda: f64,
) -> Result<L1Problem> {
    let jitter = Normal::new(0.0, noise.max(0.0)).expect("valid std");
    let step = rng.random_range(1..n.max(2));
    let high_first = rng.random::<bool>();
    let s: Vec<f64> = (0..n)
        .map(|i| f64::from(u8::from((i < step) == high_first)) + jitter.sample(rng))
        .collect();
    let b = s.iter().map(|v| -2.0 * v).collect();
    let base = BqpProblem::new(SparseMatrix::identity(n), b)?.with_report(ObjectiveReport {
        sign: 1.0,
        offset: s.iter().map(|v| v * v).sum(),
    });
    L1Problem::new(base, first_difference(n), lambda, 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = rng_for(7, "bqp", 3).random();
        let b: u64 = rng_for(7, "bqp", 3).random();
        let c: u64 = rng_for(7, "bqp", 4).random();
        let d: u64 = rng_for(7, "mrf", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn planted_point_is_feasible() {
        for i in 0..20 {
            let inst = random_bqp(&mut rng_for(1, "bqp", i), 8, 1, 1).unwrap();
            let x: Vec<f64> = inst.planted.iter().map(|&v| f64::from(v)).collect();
            assert!(inst.problem.is_feasible(&x, 0.0));
        }
    }

    #[test]
    fn blobs_stay_within_unit_distance() {
        let (inst, _) = gaussian_blobs(&mut rng_for(2, "blobs", 0), 8, 2, 0.2, 0.05).unwrap();
        assert!(inst.w.values().iter().all(|&v| v < 0.0));
    }

    #[test]
    fn planted_matching_is_feasible() {
        let (inst, perm) = point_matching(&mut rng_for(3, "match", 0), 4, 0.0, 0.2).unwrap();
        let pairs: Vec<(usize, usize)> = perm.iter().copied().enumerate().collect();
        // noiseless copy: every pair of planted assignments has affinity 1
        assert!((inst.score(&inst.encode(&pairs)) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn tv_reported_objective_is_squared_error_plus_tv() {
        let p = tv_chain(&mut rng_for(4, "tv", 0), 6, 0.0, 0.5).unwrap();
        let zeros = vec![0.0; 6];
        let s_sq = p.base.report.offset;
        assert!((p.objective(&zeros) - s_sq).abs() < 1e-12);
    }
}
