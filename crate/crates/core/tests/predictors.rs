mod common;

use common::oracles::*;
use common::*;
use disco::predictors::*;
use disco::selection::{AnchorSubset, SelectionMethod};
use disco::signatures::SignatureMode;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rows(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

#[test]
fn linear_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in 1..6 {
        let x = random_rows(&mut rng, 40, d);
        let y: Vec<f64> = x
            .iter()
            .map(|r| {
                0.5 + r
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (j as f64 - 1.5) * 0.1)
                    .sum::<f64>()
                    + rng.random_range(-0.05..0.05)
            })
            .collect();
        let fit = LinearModel::fit(&x, &y).unwrap();
        let beta = normal_equations(&x, &y);
        assert!(close(fit.intercept, beta[0], 1e-6));
        for (w, b) in fit.weights.iter().zip(&beta[1..]) {
            assert!(close(*w, *b, 1e-6), "{w} vs {b}");
        }
    }
}

fn walk(tree: &Tree, at: usize, x: &[f64]) -> f64 {
    match tree.nodes[at] {
        Node::Leaf { value } => value,
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => walk(tree, if x[feature] <= threshold { left } else { right }, x),
    }
}

#[test]
fn forest_prediction_is_mean_of_tree_walks() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random_rows(&mut rng, 60, 4);
    let y: Vec<f64> = x.iter().map(|r| (r[0] * r[1] + 1.0) / 2.0).collect();
    let cfg = ForestConfig {
        trees: 25,
        ..ForestConfig::default()
    };
    let forest = Forest::fit(&x, &y, &cfg, 5).unwrap();
    assert_eq!(forest.trees.len(), 25);
    for t in &forest.trees {
        t.check().unwrap();
    }
    for q in random_rows(&mut rng, 30, 4) {
        let mean = forest.trees.iter().map(|t| walk(t, 0, &q)).sum::<f64>() / 25.0;
        assert!(close(forest.predict(&q).unwrap(), mean, 1e-12));
    }
    assert_eq!(forest, Forest::fit(&x, &y, &cfg, 5).unwrap());
    assert_ne!(forest, Forest::fit(&x, &y, &cfg, 6).unwrap());
}

#[test]
fn unbagged_forest_memorizes_distinct_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_rows(&mut rng, 30, 3);
    let y: Vec<f64> = (0..30).map(|_| rng.random()).collect();
    let cfg = ForestConfig {
        trees: 3,
        max_features: Some(3),
        min_leaf: 1,
        bootstrap: false,
        max_depth: None,
    };
    let forest = Forest::fit(&x, &y, &cfg, 0).unwrap();
    for (r, t) in x.iter().zip(&y) {
        assert!(close(forest.predict(r).unwrap(), *t, 1e-12));
    }
}

#[test]
fn forest_training_error_below_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random_rows(&mut rng, 80, 5);
    let y: Vec<f64> = x
        .iter()
        .map(|r| 0.5 + 0.3 * r[2] + 0.05 * rng.random::<f64>())
        .collect();
    let forest = Forest::fit(&x, &y, &ForestConfig::default(), 1).unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    let mse = x
        .iter()
        .zip(&y)
        .map(|(r, t)| (forest.predict(r).unwrap() - t).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    assert!(mse <= var, "{mse} vs {var}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_one_neighbor_returns_stored_value(seed in any::<u64>(), m in 2usize..20, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_rows(&mut rng, m, d);
        let y: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        let model = KnnModel::new(1, x.clone(), y.clone()).unwrap();
        for (r, t) in x.iter().zip(&y) {
            prop_assert_eq!(model.predict(r).unwrap(), *t);
        }
    }

    #[test]
    fn knn_invariant_to_translation(seed in any::<u64>(), shift in -10.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_rows(&mut rng, 15, 3);
        let y: Vec<f64> = (0..15).map(|_| rng.random()).collect();
        let q = random_rows(&mut rng, 5, 3);
        let a = KnnModel::new(DEFAULT_NEIGHBORS, x.clone(), y.clone()).unwrap();
        let moved: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let b = KnnModel::new(DEFAULT_NEIGHBORS, moved, y).unwrap();
        for r in q {
            let s: Vec<f64> = r.iter().map(|v| v + shift).collect();
            prop_assert!((a.predict(&r).unwrap() - b.predict(&s).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn weighted_sum_recovers_accuracy_on_cluster_representatives() {
    // Three clusters of sizes 5, 3, 2; every member shares its medoid's correctness.
    let sizes = [5usize, 3, 2];
    let weights: Vec<f64> = sizes.iter().map(|&s| s as f64 / 10.0).collect();
    let subset = AnchorSubset::new(
        SelectionMethod::KmedoidsCorr,
        0,
        vec![0, 5, 8],
        Some(weights.clone()),
        None,
    );
    for pattern in 0..8u32 {
        let bits: Vec<bool> = (0..3).map(|j| pattern >> j & 1 == 1).collect();
        let full: Vec<bool> = sizes
            .iter()
            .zip(&bits)
            .flat_map(|(&s, &b)| std::iter::repeat_n(b, s))
            .collect();
        let acc = full.iter().filter(|&&b| b).count() as f64 / 10.0;
        assert!(close(
            predict_weighted_sum(&subset, &bits).unwrap(),
            acc,
            1e-15
        ));
        let model = PredictorModel::weighted_sum(weights.clone()).unwrap();
        let sig: Vec<f64> = bits.iter().map(|&b| f64::from(u8::from(b))).collect();
        assert!(close(model.predict(&sig).unwrap(), acc, 1e-15));
    }
}

#[test]
fn container_round_trips_every_payload() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random_rows(&mut rng, 12, 6);
    let y: Vec<f64> = (0..12).map(|_| rng.random()).collect();
    let forest = RegressorConfig::RandomForest(ForestConfig {
        trees: 7,
        ..ForestConfig::default()
    });
    let mut models = vec![PredictorModel::weighted_sum(vec![0.25; 4]).unwrap()];
    for (reg, pca) in [
        (RegressorConfig::Knn { neighbors: 3 }, PcaSetting::Auto),
        (RegressorConfig::Linear, PcaSetting::Dims(2)),
        (forest, PcaSetting::Off),
        (forest, PcaSetting::Auto),
    ] {
        models.push(train(&x, &y, SignatureMode::Probs, &reg, pca, 9).unwrap());
    }
    let path = std::path::Path::new("model.dpm");
    for m in models {
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"DPRM");
        let back = PredictorModel::from_bytes(&bytes, path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(
            PredictorModel::from_bytes(&bad, path)
                .unwrap_err()
                .exit_code(),
            3
        );
        assert!(PredictorModel::from_bytes(&bytes[..bytes.len() - 1], path).is_err());
    }
}
