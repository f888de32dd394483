mod common;

use bayesdd_core::bdd::train_bdd;
use bayesdd_core::kernel::gram_matrix;
use bayesdd_core::ssdd::{graph_laplacian, knn_graph, laplacian_precision, semi_prior_mean, train_ssdd, SsddOptions};
use bayesdd_core::{KernelSpec, Matrix};
use common::*;
use rand::Rng;

#[test]
fn laplacian_invariants_on_random_graphs() {
    for seed in 0..50 {
        let mut r = rng(seed);
        let n = r.random_range(5..40);
        let k = r.random_range(1..n.min(8));
        let x = random_points(&mut r, n, 2, 3.0);
        let graph = knn_graph(&x, k, 1.0).unwrap();
        let l = graph_laplacian(&graph).unwrap();
        let row_sums = l.mul_vec(&vec![1.0; n]);
        assert!(row_sums.iter().all(|v| v.abs() <= 1e-12), "seed {seed}");
        assert_eq!(l.asymmetry(), 0.0);
        let eig = to_nalgebra(&l).symmetric_eigenvalues();
        assert!(eig.min() >= -1e-10, "seed {seed}: {}", eig.min());

        let labeled = r.random_range(1..=n);
        let p = laplacian_precision(&l, labeled, 1e-3).unwrap();
        assert!(to_nalgebra(&p.matrix).cholesky().is_some());

        let mut shifted = to_nalgebra(&l);
        for i in 0..n {
            shifted[(i, i)] += 1e-3;
        }
        let inv = shifted.try_inverse().unwrap();
        let block = inv.view((0, 0), (labeled, labeled));
        let scale = block.amax();
        for i in 0..labeled {
            for j in 0..labeled {
                assert!((p.matrix[(i, j)] - block[(i, j)]).abs() <= 1e-8 * scale);
            }
        }
    }
}

#[test]
fn graph_is_symmetric_without_self_loops() {
    let mut r = rng(3);
    let x = random_points(&mut r, 20, 3, 1.0);
    let g = knn_graph(&x, 4, 0.5).unwrap();
    assert_eq!(g.weights.asymmetry(), 0.0);
    for i in 0..20 {
        assert_eq!(g.weights[(i, i)], 0.0);
        let edges = (0..20).filter(|&j| g.weights[(i, j)] > 0.0).count();
        assert!(edges >= 4);
    }
}

#[test]
fn no_unlabeled_data_reproduces_bdd_bitwise() {
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    for seed in 0..20 {
        let mut r = rng(200 + seed);
        let n = r.random_range(1..30);
        let x = random_points(&mut r, n, 2, 2.0);
        let nu = r.random_range(0.05..0.95);
        let semi = train_ssdd(&x, &Matrix::zeros(0, 2), kernel, &SsddOptions::new(nu)).unwrap();
        let bdd = train_bdd(&x, nu, kernel, None).unwrap();
        assert_eq!(semi.alpha, bdd.alpha, "seed {seed}");
    }
}

#[test]
fn unlabeled_mass_lowers_nearby_means_most() {
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let labeled = Matrix::from_rows(&[[0.0, 0.0], [6.0, 0.0]]).unwrap();
    let unlabeled = Matrix::from_rows(&[[0.2, 0.0], [-0.1, 0.3], [0.0, -0.2]]).unwrap();
    let before = semi_prior_mean(&gram_matrix(&kernel, &labeled).unwrap(), 2, 0.5).unwrap();
    let all = labeled.vstack(&unlabeled).unwrap();
    let after = semi_prior_mean(&gram_matrix(&kernel, &all).unwrap(), 2, 0.5).unwrap();
    assert!(after[0] < before[0]);
    assert!(before[0] - after[0] > 100.0 * (before[1] - after[1]).abs());
}

#[test]
fn model_keeps_only_labeled_points() {
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let mut r = rng(17);
    let labeled = random_points(&mut r, 12, 2, 1.0);
    let unlabeled = random_points(&mut r, 24, 2, 1.0);
    let mut opts = SsddOptions::new(0.5);
    opts.use_laplacian_precision = true;
    let m = train_ssdd(&labeled, &unlabeled, kernel, &opts).unwrap();
    assert_eq!(m.alpha.len(), 12);
    assert_eq!(m.train_points, labeled);
    assert_feasible(&m.alpha, 1.0);
    assert_eq!(m.semi_supervised.unwrap().unlabeled_count, 24);
}
