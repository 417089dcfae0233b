use ndarray::{array, Array1};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::nn::DenseLayer;

/// Independent route: ordered pairs p ≠ q, one feature at a time.
fn brute_force_weights(x: &Matrix, labels: &[usize]) -> Vec<f64> {
    let m = x.nrows();
    (0..x.ncols())
        .map(|i| {
            let (mut s, mut sc, mut d, mut dc) = (0.0, 0.0, 0.0, 0.0);
            for p in 0..m {
                for q in 0..m {
                    if p == q {
                        continue;
                    }
                    let e = (-(x[[p, i]] - x[[q, i]]).powi(2)).exp();
                    if labels[p] == labels[q] {
                        s += e;
                        sc += 1.0;
                    } else {
                        d += 1.0 - e;
                        dc += 1.0;
                    }
                }
            }
            (s / sc) * (d / dc)
        })
        .collect()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Matrix, Vec<usize>) {
    let m = rng.gen_range(4..20);
    let n = rng.gen_range(1..6);
    let classes = rng.gen_range(2..4);
    let x = Matrix::from_shape_simple_fn((m, n), || rng.gen::<f64>());
    let mut labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..classes)).collect();
    labels[0] = 0;
    labels[1] = 0;
    labels[2] = 1;
    (x, labels)
}

#[test]
fn constant_feature_has_zero_weight() {
    let x = array![[0.3, 0.0], [0.3, 1.0], [0.3, 0.0], [0.3, 1.0]];
    let w = compute_feature_weights(&x, &[0, 1, 0, 1], None).unwrap();
    assert_eq!(w.values()[0], 0.0);
}

#[test]
fn perfectly_separating_binary_feature() {
    let x = array![[0.0], [0.0], [0.0], [1.0], [1.0]];
    let w = compute_feature_weights(&x, &[0, 0, 0, 1, 1], None).unwrap();
    let expected = 1.0 - (-1.0f64).exp();
    assert!((w.values()[0] - expected).abs() < 1e-15);
    assert!((w.values()[0] - 0.6321).abs() < 1e-4);
    assert_eq!(w.m_used, 5);
}

#[test]
fn matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let (x, labels) = random_instance(&mut rng);
        let w = compute_feature_weights(&x, &labels, None).unwrap();
        for (a, b) in w.values().iter().zip(brute_force_weights(&x, &labels)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn weight_estimation_errors() {
    let x = array![[0.1], [0.2], [0.3]];
    assert!(compute_feature_weights(&x, &[1, 1, 1], None).is_err());
    assert!(compute_feature_weights(&x, &[0, 1, 2], None).is_err());
    assert!(
        compute_feature_weights(&x.slice(ndarray::s![..1, ..]).to_owned(), &[0], None).is_err()
    );
    assert!(matches!(
        compute_feature_weights(&x, &[0, 1], None),
        Err(DacError::DimensionMismatch { .. })
    ));
    assert!(
        compute_feature_weights(&x, &[0, 0, 1], Some(PairSampling { cap: 0, seed: 1 })).is_err()
    );
}

#[test]
fn pair_cap_above_pair_counts_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (x, labels) = random_instance(&mut rng);
    let full = compute_feature_weights(&x, &labels, None).unwrap();
    let capped = compute_feature_weights(
        &x,
        &labels,
        Some(PairSampling {
            cap: 1_000_000,
            seed: 3,
        }),
    )
    .unwrap();
    assert_eq!(full, capped);
}

#[test]
fn pair_cap_is_seeded_and_approximates_full() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = Matrix::from_shape_simple_fn((120, 4), || rng.gen::<f64>());
    let labels: Vec<usize> = (0..120).map(|k| k % 3).collect();
    let s = Some(PairSampling {
        cap: 2000,
        seed: 11,
    });
    let a = compute_feature_weights(&x, &labels, s).unwrap();
    let b = compute_feature_weights(&x, &labels, s).unwrap();
    assert_eq!(a, b);
    let full = compute_feature_weights(&x, &labels, None).unwrap();
    for (u, v) in a.values().iter().zip(full.values()) {
        assert!((u - v).abs() < 0.02, "{u} vs {v}");
    }
}

#[test]
fn weights_file_round_trip() {
    let w = FeatureWeights::new(array![0.0, 0.25, 1.0 / 3.0], 10).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.dacw");
    w.save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"DACW");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
    assert_eq!(bytes.len(), 8 + 24);
    let back = FeatureWeights::load(&path).unwrap();
    assert_eq!(back.values(), w.values());
    assert!(FeatureWeights::from_bytes(&bytes[..bytes.len() - 3], &path).is_err());
}

#[test]
fn unit_mean_normalization() {
    let w = FeatureWeights::new(array![0.1, 0.3], 0).unwrap();
    let n = w.normalized_to_unit_mean();
    assert!((n.mean() - 1.0).abs() < 1e-15);
    assert!((n.values()[1] / n.values()[0] - 3.0).abs() < 1e-12);
}

#[test]
fn weighted_mse_examples() {
    let y = array![[1.0, 1.0]];
    let y_hat = array![[0.0, 0.0]];
    let w = FeatureWeights::new(array![0.5, 1.0], 0).unwrap();
    assert_eq!(weighted_mse(&y, &y_hat, &w).unwrap(), 0.75);
    assert_eq!(weighted_mse(&y, &y, &w).unwrap(), 0.0);
    assert!(weighted_mse(&y, &array![[0.0, 0.0, 0.0]], &w).is_err());
    let w3 = FeatureWeights::uniform(3, 1.0).unwrap();
    assert!(weighted_mse(&y, &y_hat, &w3).is_err());
}

#[test]
fn unit_weights_reduce_to_plain_mse() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (b, n) = (rng.gen_range(1..8), rng.gen_range(1..10));
        let y = Matrix::from_shape_simple_fn((b, n), || rng.gen::<f64>());
        let y_hat = Matrix::from_shape_simple_fn((b, n), || rng.gen::<f64>());
        let mse = (&y - &y_hat).mapv(|d| d * d).mean().unwrap();
        let w = FeatureWeights::uniform(n, 1.0).unwrap();
        let got = weighted_mse(&y, &y_hat, &w).unwrap();
        assert!((got - mse).abs() <= 1e-12 * mse.abs());
    }
}

#[test]
fn weighted_mse_grad_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let (b, n) = (rng.gen_range(1..5), rng.gen_range(1..6));
        let y = Matrix::from_shape_simple_fn((b, n), || rng.gen::<f64>());
        let y_hat = Matrix::from_shape_simple_fn((b, n), || rng.gen::<f64>());
        let w =
            FeatureWeights::new(Array1::from_shape_simple_fn(n, || rng.gen::<f64>()), 0).unwrap();
        let g = weighted_mse_grad(&y, &y_hat, &w).unwrap();
        let h = 1e-6;
        for k in 0..b {
            for i in 0..n {
                let mut up = y_hat.clone();
                up[[k, i]] += h;
                let mut down = y_hat.clone();
                down[[k, i]] -= h;
                let numeric = (weighted_mse(&y, &up, &w).unwrap()
                    - weighted_mse(&y, &down, &w).unwrap())
                    / (2.0 * h);
                let a = g[[k, i]];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-10);
                assert!(rel < 1e-6, "{a} vs {numeric}");
            }
        }
    }
}

#[test]
fn weighted_mse_grad_edge_cases() {
    let y = array![[0.2, 0.4], [0.9, 0.1]];
    let y_hat = array![[0.5, 0.5], [0.5, 0.5]];
    let w = FeatureWeights::new(array![0.0, 0.7], 0).unwrap();
    let g = weighted_mse_grad(&y, &y_hat, &w).unwrap();
    assert!(g.column(0).iter().all(|&v| v == 0.0));
    assert!(g.column(1).iter().all(|&v| v != 0.0));
    assert!(weighted_mse_grad(&y, &y, &w)
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
}

fn three_weight_model() -> Autoencoder {
    let enc = DenseLayer::new(array![[1.0, -1.0, 2.0]], Array1::zeros(1), vec![]).unwrap();
    let dec = DenseLayer::zeros(1, 3, vec![crate::nn::Activation::Sigmoid]).unwrap();
    Autoencoder::from_layers(vec![enc], vec![dec]).unwrap()
}

#[test]
fn l2_regularization_examples() {
    let mut m = three_weight_model();
    assert_eq!(l2_regularization(&m), 6.0);
    m.for_each_parameter_mut(|p| *p *= 3.0);
    assert_eq!(l2_regularization(&m), 54.0);
    m.for_each_parameter_mut(|p| *p = 0.0);
    assert_eq!(l2_regularization(&m), 0.0);

    let mut r = Autoencoder::init(&[6, 4, 2], &[2, 4, 6], 1).unwrap();
    r.for_each_parameter_mut(|p| *p += 0.1);
    let base = l2_regularization(&r);
    r.for_each_parameter_mut(|p| *p *= -2.5);
    assert!((l2_regularization(&r) - 6.25 * base).abs() < 1e-12 * base);
}

#[test]
fn total_loss_examples() {
    let y = array![[0.2, 0.9]];
    let y_hat = array![[0.5, 0.5]];
    let w = FeatureWeights::new(array![0.4, 0.6], 0).unwrap();
    let model = three_weight_model();
    let cmse = weighted_mse(&y, &y_hat, &w).unwrap();

    let r = total_loss(&y, &y_hat, &w, &model, 0.0).unwrap();
    assert_eq!(r.total, cmse);
    assert_eq!(r.l_reg, 6.0);

    let r = total_loss(&y, &y_hat, &w, &model, DEFAULT_BETA).unwrap();
    assert_eq!(r.total, cmse + 1e-5 * 6.0);
    assert_eq!(r.beta, 0.00001);

    let mut zero = model.clone();
    zero.for_each_parameter_mut(|p| *p = 0.0);
    assert_eq!(
        total_loss(&y, &y_hat, &w, &zero, DEFAULT_BETA)
            .unwrap()
            .total,
        cmse
    );
    assert_eq!(
        total_loss(&y, &y, &w, &zero, DEFAULT_BETA).unwrap().total,
        0.0
    );
    assert!(total_loss(&y, &y, &w, &zero, -1e-3).is_err());
}

#[test]
fn objective_gradients_include_regularization() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut model = Autoencoder::init(&[4, 3, 2], &[2, 3, 4], 2).unwrap();
    model.for_each_parameter_mut(|p| *p = rng.gen_range(-0.5..0.5));
    let x = Matrix::from_shape_simple_fn((5, 4), || rng.gen::<f64>());
    let w = FeatureWeights::new(Array1::from_shape_simple_fn(4, || rng.gen::<f64>()), 0).unwrap();
    let (_, g0) = objective_gradients(&model, &x, &w, 0.0).unwrap();
    let (report, g1) = objective_gradients(&model, &x, &w, 0.5).unwrap();
    for ((a, b), t) in g0
        .flatten()
        .iter()
        .zip(g1.flatten())
        .zip(model.flat_parameters())
    {
        assert!((b - a - t).abs() < 1e-14);
    }
    assert_eq!(report.total, report.l_cmse + 0.5 * report.l_reg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_lie_in_unit_interval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, labels) = random_instance(&mut rng);
        let w = compute_feature_weights(&x, &labels, None).unwrap();
        prop_assert!(w.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn weights_invariant_to_sample_order_and_label_names(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, labels) = random_instance(&mut rng);
        let base = compute_feature_weights(&x, &labels, None).unwrap();

        let mut order: Vec<usize> = (0..x.nrows()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let px = x.select(ndarray::Axis(0), &order);
        let pl: Vec<usize> = order.iter().map(|&k| labels[k]).collect();
        let permuted = compute_feature_weights(&px, &pl, None).unwrap();

        let renamed: Vec<usize> = labels.iter().map(|&l| 100 - l * 7).collect();
        let relabeled = compute_feature_weights(&x, &renamed, None).unwrap();

        for ((a, b), c) in base.values().iter().zip(permuted.values()).zip(relabeled.values()) {
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert_eq!(a, c);
        }
    }

    #[test]
    fn weighted_mse_nonnegative_and_zero_only_on_match(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (b, n) = (rng.gen_range(1..5), rng.gen_range(2..6));
        let y = Matrix::from_shape_simple_fn((b, n), || rng.gen::<f64>());
        let mut wv = Array1::from_shape_simple_fn(n, || rng.gen::<f64>() + 0.01);
        wv[0] = 0.0;
        let w = FeatureWeights::new(wv, 0).unwrap();
        let mut y_hat = y.clone();
        y_hat.column_mut(0).fill(0.5);
        prop_assert_eq!(weighted_mse(&y, &y_hat, &w).unwrap(), 0.0);
        y_hat[[0, 1]] += 0.1;
        prop_assert!(weighted_mse(&y, &y_hat, &w).unwrap() > 0.0);
    }
}
