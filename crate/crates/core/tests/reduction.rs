mod common;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdr_core::embed::{embed_linear, embed_neighbor, principal_scores, trustworthiness, NeighborParams};
use tdr_core::knn::exact_knn;
use tdr_core::metrics::cluster_purity;
use tdr_core::stage1::{compress, ModeCombo, Stage1Method};
use tdr_core::synthetic::{random_tensor, three_blobs, two_moons};
use tdr_core::tensor::{standardize, unfold};
use tdr_core::JobControl;

#[test]
fn compressed_cells_are_weighted_fibers() {
    let t = random_tensor([5, 7, 4], 3);
    for combo in ModeCombo::all() {
        let c = compress(&t, combo, Stage1Method::Pca).unwrap();
        let point = combo.point_mode();
        for i in 0..c.y.nrows() {
            for j in 0..c.y.ncols() {
                let mut coords = [0; 3];
                coords[point.axis()] = i;
                coords[combo.second().axis()] = j;
                let direct: f64 = t.fiber(combo.first(), coords).dot(&c.w);
                assert!((c.y[[i, j]] - direct).abs() <= 1e-9, "{combo} ({i},{j})");
            }
        }
    }
}

#[test]
fn quality_is_variance_share_on_centered_input() {
    // Standardizing along the compressed mode centers every column of the
    // unfolded matrix, so the variance of Y's cells over the total fiber
    // variance equals the explained share.
    let t = standardize(&random_tensor([6, 9, 5], 8), tdr_core::Mode::Variable);
    let combo = ModeCombo::new(tdr_core::Mode::Variable, tdr_core::Mode::Time).unwrap();
    let c = compress(&t, combo, Stage1Method::Pca).unwrap();
    let x = unfold(&t, combo.first()).matrix;
    let cells = c.y.len() as f64;
    let mean = c.y.sum() / cells;
    let var_y = c.y.mapv(|v| (v - mean).powi(2)).sum() / cells;
    let total = common::covariance_oracle(x.view()).trace();
    assert!((var_y / total - c.quality).abs() <= 1e-6);
}

#[test]
fn compression_is_bit_deterministic() {
    let t = random_tensor([8, 6, 5], 12);
    let combo = ModeCombo::all()[2];
    let a = compress(&t, combo, Stage1Method::Pca).unwrap();
    let b = compress(&t, combo, Stage1Method::Pca).unwrap();
    assert!(a.w.iter().zip(b.w.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
    assert_eq!(a.y, b.y);
}

#[test]
fn linear_axes_order_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let rows = rng.random_range(6..30);
        let cols = rng.random_range(3..7);
        let scale: Vec<f64> = (0..cols).map(|_| rng.random_range(0.2..4.0)).collect();
        let y = Array2::from_shape_fn((rows, cols), |(_, j)| scale[j] * rng.random_range(-1.0..1.0));
        let e = embed_linear(y.view()).unwrap();
        let var = |c: usize| e.z.column(c).var(0.0);
        let eig = common::sorted_eigen(&common::covariance_oracle(y.view()));
        assert!(var(0) >= var(1) - 1e-9);
        assert!((var(0) - eig[0].0).abs() <= 1e-6 * eig[0].0.max(1.0));
        assert!((var(1) - eig[1].0).abs() <= 1e-6 * eig[0].0.max(1.0));
        // No unit direction projects more variance than the first axis.
        for _ in 0..10 {
            let mut v: ndarray::Array1<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            v /= v.dot(&v).sqrt();
            let centered = &y - &y.mean_axis(Axis(0)).unwrap();
            let p = centered.dot(&v);
            assert!(p.var(0.0) <= var(0) + 1e-9);
        }
    }
}

#[test]
fn linear_embedding_of_separated_blobs() {
    let (y, labels) = three_blobs(60, 5, 20.0, 2);
    let e = embed_linear(y.view()).unwrap();
    assert!(cluster_purity(e.z.view(), &labels, 0) >= 0.99);
}

#[test]
fn linear_embedding_is_rotation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y = Array2::from_shape_fn((40, 4), |(_, j)| (j as f64 + 1.0) * rng.random_range(-1.0..1.0));
    // Random orthogonal matrix via QR of a Gaussian-ish matrix.
    let g = nalgebra::DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    let rotated = common::to_dmatrix(y.view()) * q;
    let yr = Array2::from_shape_fn((40, 4), |(i, j)| rotated[(i, j)]);
    let a = embed_linear(y.view()).unwrap().z;
    let b = embed_linear(yr.view()).unwrap().z;
    assert!(common::procrustes_residual(&a, &b) <= 1e-6);
}

#[test]
fn linear_trustworthiness_on_planar_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // Points on a tilted plane in R^5.
    let y = Array2::from_shape_fn((80, 5), |_| 0.0);
    let mut y = y;
    for mut row in y.rows_mut() {
        let (u, v): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
        row.assign(&ndarray::arr1(&[u + v, u - v, 0.5 * u, 2.0 * v, u]));
    }
    let e = embed_linear(y.view()).unwrap();
    assert!(trustworthiness(y.view(), e.z.view(), 10).unwrap() >= 0.99);
}

#[test]
fn wide_matrices_take_the_gram_route() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let y = Array2::from_shape_fn((5, 40), |_| rng.random_range(-1.0..1.0));
    let (scores, rank) = principal_scores(y.view(), 2).unwrap();
    assert_eq!(rank, 2);
    let eig = common::sorted_eigen(&common::covariance_oracle(y.view()));
    assert!((scores.column(0).var(0.0) - eig[0].0).abs() <= 1e-8);
}

#[test]
fn neighbor_embedding_is_bit_deterministic() {
    let (y, _) = three_blobs(30, 4, 10.0, 1);
    let p = NeighborParams { seed: 42, epochs: 200, ..Default::default() };
    let a = embed_neighbor(y.view(), p, &JobControl::new()).unwrap();
    let b = embed_neighbor(y.view(), p, &JobControl::new()).unwrap();
    assert!(a.z.iter().zip(b.z.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    let c = embed_neighbor(y.view(), NeighborParams { seed: 43, ..p }, &JobControl::new()).unwrap();
    assert_ne!(a.z, c.z);
}

#[test]
fn duplicate_rows_land_together() {
    let (mut y, _) = three_blobs(20, 3, 10.0, 7);
    let src = y.row(5).to_owned();
    y.row_mut(40).assign(&src);
    let e = embed_neighbor(y.view(), NeighborParams::default(), &JobControl::new()).unwrap();
    let min = e.z.fold_axis(Axis(0), f64::INFINITY, |a, &b| a.min(b));
    let max = e.z.fold_axis(Axis(0), f64::NEG_INFINITY, |a, &b| a.max(b));
    let diameter = (&max - &min).mapv(|v| v * v).sum().sqrt();
    let gap = (&e.z.row(5) - &e.z.row(40)).mapv(|v| v * v).sum().sqrt();
    assert!(gap <= 1e-3 * diameter);
}

#[test]
fn knn_edges_survive_translation_and_scaling() {
    // Powers of two keep the affine map exact in floating point.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y = Array2::from_shape_fn((60, 3), |_| (rng.random_range(-64i32..64) as f64) / 8.0);
    let moved = y.mapv(|v| 4.0 * v + 1024.0);
    assert_eq!(exact_knn(y.view(), 15).edges(), exact_knn(moved.view(), 15).edges());
}

#[test]
fn moons_are_trustworthy() {
    let (y, _) = two_moons(200, 0.05, 8);
    let e = embed_neighbor(y.view(), NeighborParams { seed: 1, ..Default::default() }, &JobControl::new()).unwrap();
    let t = trustworthiness(y.view(), e.z.view(), 10).unwrap();
    assert!(t >= 0.90, "trustworthiness {t}");
}

#[test]
fn trustworthiness_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let n = rng.random_range(8..30);
        let y = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0));
        let z = Array2::from_shape_fn((n, 2), |(i, j)| y[[i, j]] + 0.3 * rng.random_range(-1.0..1.0));
        let k = rng.random_range(1..(n - 1) / 2);
        let got = trustworthiness(y.view(), z.view(), k).unwrap();
        let want = common::trustworthiness_oracle(y.view(), z.view(), k);
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

#[test]
fn shuffling_an_embedding_lowers_trust() {
    let (y, _) = three_blobs(40, 4, 12.0, 5);
    let z = embed_linear(y.view()).unwrap().z;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut order: Vec<usize> = (0..z.nrows()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let shuffled = z.select(Axis(0), &order);
    let good = trustworthiness(y.view(), z.view(), 10).unwrap();
    let bad = trustworthiness(y.view(), shuffled.view(), 10).unwrap();
    assert!(bad < good, "{bad} !< {good}");
}
