//! Seeded fixtures shared by the criterion benches.

use lpbox::linalg::{spmv, FnOperator};
use lpbox::problems::{build_mrf, grid_similarity, laplacian, Neighbourhood};
use lpbox::synth::{random_bqp, rng_for, segmentation_mrf};
use lpbox::{BqpProblem, SparseMatrix};
use rand::Rng;

/// Seed for every bench fixture.
pub const SEED: u64 = 7;

/// `L + I` for the 8-neighbour Laplacian of a `side × side` grid.
pub fn grid_system(side: usize) -> SparseMatrix {
    let w = grid_similarity(side, side, Neighbourhood::Eight, |_, _| 1.0);
    laplacian(&w)
        .add(&SparseMatrix::identity(side * side))
        .expect("same shape")
}

/// Matrix-free operator for `m` with its diagonal as the preconditioner.
pub fn operator(m: &SparseMatrix) -> FnOperator<impl Fn(&[f64], &mut [f64]) + '_> {
    FnOperator::new(m.n_rows(), move |v: &[f64], out: &mut [f64]| {
        out.copy_from_slice(&spmv(m, v).expect("square operator"));
    })
    .with_diagonal(m.diagonal())
}

/// A seeded right-hand side in `[-1, 1)^n`.
pub fn rhs(n: usize) -> Vec<f64> {
    let mut rng = rng_for(SEED, "bench-rhs", n as u64);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// The first instance of the BQP suite with its initial point.
pub fn small_bqp() -> (BqpProblem, Vec<f64>) {
    let inst = random_bqp(&mut rng_for(SEED, "bqp", 0), 12, 1, 1).expect("valid sizes");
    let mut init = rng_for(SEED, "bqp-init", 0);
    let x0 = (0..12).map(|_| init.random()).collect();
    (inst.problem, x0)
}

/// A two-label segmentation MRF on a `side × side` grid with a random labeling.
pub fn grid_mrf(side: usize) -> (BqpProblem, Vec<f64>) {
    let inst = segmentation_mrf(
        &mut rng_for(SEED, "bench-mrf", side as u64),
        side,
        side,
        0.5,
    )
    .expect("valid noise");
    let mut init = rng_for(SEED, "bench-mrf-init", side as u64);
    let labels: Vec<usize> = (0..inst.n_nodes).map(|_| init.random_range(0..2)).collect();
    let x0 = inst.encode(&labels);
    (build_mrf(&inst).expect("valid instance"), x0)
}
