use std::fs;

use lpbox::io::{
    load_bqp, load_clustering, load_l1, load_matching, load_mrf, save_bqp, save_clustering,
    save_l1, save_matching, save_mrf,
};
use lpbox::l1ext::first_difference;
use lpbox::synth::{
    gaussian_blobs, point_matching, random_bqp, rng_for, segmentation_mrf, tv_chain,
};
use lpbox::{BqpProblem, Error, SparseMatrix};

fn objectives_agree(a: &BqpProblem, b: &BqpProblem) {
    assert_eq!(a.dim(), b.dim());
    for mask in 0..1u32 << a.dim().min(10) {
        let x: Vec<f64> = (0..a.dim())
            .map(|i| f64::from((mask >> (i % 10)) & 1))
            .collect();
        assert!((a.original_objective(&x) - b.original_objective(&x)).abs() <= 1e-9);
        assert_eq!(a.is_feasible(&x, 0.0), b.is_feasible(&x, 0.0));
    }
}

#[test]
fn bqp_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = random_bqp(&mut rng_for(1, "io", 0), 8, 2, 1).unwrap();
    save_bqp(dir.path(), &inst.problem).unwrap();
    let back = load_bqp(dir.path()).unwrap();
    assert!((back.psd_shift - inst.problem.psd_shift).abs() <= 1e-12);
    assert_eq!(
        (back.c1.clone(), back.d1.clone()),
        (inst.problem.c1.clone(), inst.problem.d1.clone())
    );
    assert_eq!(
        (back.c2.clone(), back.d2.clone()),
        (inst.problem.c2.clone(), inst.problem.d2.clone())
    );
    objectives_agree(&inst.problem, &back);
}

#[test]
fn missing_constraint_files_mean_no_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let p = BqpProblem::new(SparseMatrix::zeros(2, 2), vec![-1.0, 1.0]).unwrap();
    save_bqp(dir.path(), &p).unwrap();
    assert!(!dir.path().join("C1.mtx").exists());
    let back = load_bqp(dir.path()).unwrap();
    assert_eq!((back.n_equalities(), back.n_inequalities()), (0, 0));
}

#[test]
fn automatic_alpha_shifts_indefinite_problems() {
    let dir = tempfile::tempdir().unwrap();
    let m = SparseMatrix::from_dense(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
    save_bqp(dir.path(), &BqpProblem::new(m, vec![0.0, 0.0]).unwrap()).unwrap();
    fs::write(dir.path().join("manifest"), "n = 2\nalpha = auto\n").unwrap();
    let p = load_bqp(dir.path()).unwrap();
    assert!(p.psd_shift >= 2.0);
    assert_eq!(p.original_objective(&[1.0, 1.0]), 4.0);
}

#[test]
fn l1_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = tv_chain(&mut rng_for(1, "io", 1), 6, 0.3, 0.7).unwrap();
    save_l1(dir.path(), &p).unwrap();
    let back = load_l1(dir.path()).unwrap();
    assert_eq!(back.c, first_difference(6));
    assert_eq!((back.lambda, back.rho0), (0.7, p.rho0));
    objectives_agree(&p.base, &back.base);
}

#[test]
fn l1_requires_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let p = tv_chain(&mut rng_for(1, "io", 2), 4, 0.3, 0.7).unwrap();
    save_l1(dir.path(), &p).unwrap();
    fs::write(dir.path().join("manifest"), "n = 4\n").unwrap();
    assert!(matches!(load_l1(dir.path()), Err(Error::Parse { .. })));
}

#[test]
fn application_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mrf = segmentation_mrf(&mut rng_for(1, "io", 3), 3, 3, 0.5).unwrap();
    save_mrf(&dir.path().join("mrf"), &mrf).unwrap();
    assert_eq!(load_mrf(&dir.path().join("mrf")).unwrap(), mrf);

    let (matching, _) = point_matching(&mut rng_for(1, "io", 4), 3, 0.05, 0.2).unwrap();
    save_matching(&dir.path().join("match"), &matching).unwrap();
    assert_eq!(load_matching(&dir.path().join("match")).unwrap(), matching);

    let (clu, _) = gaussian_blobs(&mut rng_for(1, "io", 5), 6, 2, 0.2, 0.1).unwrap();
    save_clustering(&dir.path().join("clu"), &clu).unwrap();
    assert_eq!(load_clustering(&dir.path().join("clu")).unwrap(), clu);
}

#[test]
fn clustering_from_similarity_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let w = SparseMatrix::from_triplets(
        4,
        4,
        vec![(0, 1, -1.0), (1, 0, -1.0), (2, 3, -2.0), (3, 2, -2.0)],
    )
    .unwrap();
    let inst = lpbox::problems::ClusteringInstance::from_similarity(w, 2).unwrap();
    save_clustering(dir.path(), &inst).unwrap();
    assert!(dir.path().join("W.mtx").exists());
    assert_eq!(load_clustering(dir.path()).unwrap(), inst);
}

#[test]
fn errors_name_the_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = BqpProblem::new(SparseMatrix::identity(2), vec![0.0, 0.0]).unwrap();
    save_bqp(dir.path(), &p).unwrap();

    fs::write(
        dir.path().join("A.mtx"),
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 x 1.0\n",
    )
    .unwrap();
    match load_bqp(dir.path()) {
        Err(Error::Parse { path, line, .. }) => {
            assert!(path.ends_with("A.mtx"));
            assert_eq!(line, 4);
        }
        other => panic!("{other:?}"),
    }

    save_bqp(dir.path(), &p).unwrap();
    fs::write(dir.path().join("b.txt"), "0\nzero\n").unwrap();
    match load_bqp(dir.path()) {
        Err(Error::Parse { path, line, .. }) => {
            assert!(path.ends_with("b.txt"));
            assert_eq!(line, 2);
        }
        other => panic!("{other:?}"),
    }

    save_bqp(dir.path(), &p).unwrap();
    fs::write(dir.path().join("manifest"), "n = 3\n").unwrap();
    assert!(matches!(load_bqp(dir.path()), Err(Error::Parse { .. })));

    let dir2 = tempfile::tempdir().unwrap();
    fs::write(dir2.path().join("meta"), "n_nodes = 2\nK = 2\n").unwrap();
    fs::write(
        dir2.path().join("W.mtx"),
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1.0\n",
    )
    .unwrap();
    fs::write(dir2.path().join("unary.txt"), "0 0 0 0\n").unwrap();
    // W is not symmetric
    assert!(matches!(
        load_mrf(dir2.path()),
        Err(Error::NotSymmetric { .. })
    ));
}
