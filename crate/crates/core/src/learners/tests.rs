use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::scalar::softmax;

fn classes(n: usize) -> Vec<String> {
    (0..n).map(|c| format!("c{c}")).collect()
}

fn sv(dim: usize, pairs: &[(usize, f64)]) -> SparseVector<f64> {
    SparseVector::from_pairs(dim, pairs.to_vec()).unwrap()
}

/// 20 points in 6 dimensions; class 0 lives on features 0..3, class 1 on
/// 3..6, so every algorithm can separate them.
fn separable() -> (Vec<SparseVector<f64>>, Vec<usize>) {
    let mut rng = util::rng(11);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..20 {
        let c = i % 2;
        let base = c * 3;
        let pairs: Vec<(usize, f64)> = (0..3).map(|j| (base + j, rng.gen_range(1.0..3.0))).collect();
        x.push(sv(6, &pairs));
        y.push(c);
    }
    (x, y)
}

fn random_data(seed: u64, n: usize, dim: usize, n_classes: usize) -> (Vec<SparseVector<f64>>, Vec<usize>) {
    let mut rng = util::rng(seed);
    let y: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
    let x = y
        .iter()
        .map(|&c| {
            let mut pairs: Vec<(usize, f64)> = Vec::new();
            for f in 0..dim {
                if rng.gen_bool(if f % n_classes == c { 0.5 } else { 0.2 }) {
                    pairs.push((f, rng.gen_range(1..4) as f64));
                }
            }
            sv(dim, &pairs)
        })
        .collect();
    (x, y)
}

fn all_specs(seed: u64) -> Vec<ModelSpec> {
    Algorithm::ALL.iter().map(|&a| ModelSpec::new(a, seed)).collect()
}

#[test]
fn separable_fixture_reaches_full_training_accuracy() {
    let (x, y) = separable();
    for spec in all_specs(3) {
        let m = train(&spec, &x, &y, &classes(2)).unwrap();
        let hits = x.iter().zip(&y).filter(|(v, &c)| m.predict(v).unwrap().label == c).count();
        assert_eq!(hits, 20, "{}", spec.label());
    }
}

#[test]
fn singleton_docs_separate() {
    let x = vec![sv(2, &[(0, 1.0)]), sv(2, &[(1, 1.0)])];
    let m = train(&ModelSpec::new(Algorithm::MultinomialNb, 0), &x, &[0, 1], &classes(2)).unwrap();
    assert_eq!(m.predict(&sv(2, &[(0, 1.0)])).unwrap().label, 0);
}

#[test]
fn multinomial_posteriors_match_hand_computation() {
    // docs: [2,1,0]->0, [1,0,0]->0, [0,1,2]->1, [0,0,1]->1
    let x = vec![
        sv(3, &[(0, 2.0), (1, 1.0)]),
        sv(3, &[(0, 1.0)]),
        sv(3, &[(1, 1.0), (2, 2.0)]),
        sv(3, &[(2, 1.0)]),
    ];
    let y = [0, 0, 1, 1];
    let m = train(&ModelSpec::new(Algorithm::MultinomialNb, 0), &x, &y, &classes(2)).unwrap();
    // class 0 counts (3,1,0)+1 over 7; class 1 counts (0,1,3)+1 over 7
    let l0: [f64; 3] = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
    let l1: [f64; 3] = [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0];
    let q = sv(3, &[(0, 1.0), (1, 2.0), (2, 1.0)]);
    let j0 = 0.5 * l0[0] * l0[1].powi(2) * l0[2];
    let j1 = 0.5 * l1[0] * l1[1].powi(2) * l1[2];
    let p = m.predict(&q).unwrap();
    assert!(p.calibrated);
    assert!((p.scores[0].exp() - j0 / (j0 + j1)).abs() < 1e-9);
    assert!((p.scores[1].exp() - j1 / (j0 + j1)).abs() < 1e-9);
    let q = sv(3, &[(0, 3.0)]);
    let j0 = 0.5 * l0[0].powi(3);
    let j1 = 0.5 * l1[0].powi(3);
    assert!((m.predict(&q).unwrap().scores[0].exp() - j0 / (j0 + j1)).abs() < 1e-9);
}

#[test]
fn complement_nb_prefers_class_whose_complement_lacks_the_term() {
    let (x, y) = random_data(5, 60, 12, 3);
    let m = train(&ModelSpec::new(Algorithm::ComplementNb, 0), &x, &y, &classes(3)).unwrap();
    let hits = x.iter().zip(&y).filter(|(v, &c)| m.predict(v).unwrap().label == c).count();
    assert!(hits > 30, "{hits}");
}

#[test]
fn nb_scores_form_a_simplex() {
    let (x, y) = random_data(9, 40, 15, 4);
    for alg in [Algorithm::MultinomialNb, Algorithm::ComplementNb] {
        let m = train(&ModelSpec::new(alg, 0), &x, &y, &classes(4)).unwrap();
        for v in &x {
            let s: f64 = m.predict(v).unwrap().scores.iter().map(|s| s.exp()).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn pa_leaves_weights_alone_on_zero_loss() {
    // once every instance clears the margin, further passes
    // change nothing
    let x = vec![sv(2, &[(0, 5.0)]), sv(2, &[(1, 5.0)])];
    let y = [0, 1];
    let mut spec = ModelSpec::new(Algorithm::PassiveAggressive, 0);
    spec.hyper = Hyperparameters::PassiveAggressive { c: 10.0, epochs: 20 };
    let one = train(&spec, &x, &y, &classes(2)).unwrap();
    let Params::Linear { weights: w1, bias: b1 } = &one.params else { panic!() };
    for (v, &c) in x.iter().zip(&y) {
        for k in 0..2 {
            let s = if k == c { 1.0 } else { -1.0 };
            assert!(s * (v.dot_dense(&w1[k]) + b1[k]) >= 1.0 - 1e-12);
        }
    }
    spec.hyper = Hyperparameters::PassiveAggressive { c: 10.0, epochs: 25 };
    let five = train(&spec, &x, &y, &classes(2)).unwrap();
    assert_eq!(one.params, five.params);
}

#[test]
fn knn_zero_distance_neighbour_wins() {
    let x = vec![sv(3, &[(0, 1.0)]), sv(3, &[(0, 1.0), (1, 0.1)]), sv(3, &[(0, 1.0), (2, 0.1)])];
    let y = [1, 0, 0];
    let mut spec = ModelSpec::new(Algorithm::Knn, 0);
    spec.hyper = Hyperparameters::Knn { k: KChoice::Fixed(3) };
    let m = train(&spec, &x, &y, &classes(2)).unwrap();
    let p = m.predict(&sv(3, &[(0, 2.0)])).unwrap();
    assert_eq!(p.label, 1);
    assert!(p.scores.iter().all(|s| s.is_finite()));
    spec.hyper = Hyperparameters::Knn { k: KChoice::Fixed(1) };
    let m = train(&spec, &x, &y, &classes(2)).unwrap();
    assert_eq!(m.predict(&x[1]).unwrap().label, 0);
}

#[test]
fn knn_auto_records_choice_from_grid() {
    let (x, y) = random_data(2, 45, 10, 3);
    let mut spec = ModelSpec::new(Algorithm::Knn, 4);
    spec.hyper = Hyperparameters::Knn {
        k: KChoice::Auto(vec![1, 3, 5, 9]),
    };
    let m = train(&spec, &x, &y, &classes(3)).unwrap();
    let Params::Knn { k, .. } = m.params else { panic!() };
    assert!([1, 3, 5, 9].contains(&k));
}

#[test]
fn identical_trees_vote_like_one() {
    let (x, y) = random_data(8, 50, 10, 2);
    let mut spec = ModelSpec::new(Algorithm::RandomForest, 1);
    spec.hyper = Hyperparameters::RandomForest {
        n_trees: 1,
        max_depth: None,
        min_samples_split: 2,
        max_features: None,
    };
    let single = train(&spec, &x, &y, &classes(2)).unwrap();
    let Params::Forest { trees } = &single.params else { panic!() };
    let mut many = single.clone();
    many.params = Params::Forest {
        trees: vec![trees[0].clone(); 10],
    };
    let (q, _) = random_data(99, 30, 10, 2);
    for v in &q {
        assert_eq!(single.predict(v).unwrap().label, many.predict(v).unwrap().label);
    }
}

#[test]
fn forest_respects_max_depth() {
    let (x, y) = random_data(8, 80, 10, 2);
    let mut spec = ModelSpec::new(Algorithm::RandomForest, 1);
    spec.hyper = Hyperparameters::RandomForest {
        n_trees: 3,
        max_depth: Some(2),
        min_samples_split: 2,
        max_features: None,
    };
    let m = train(&spec, &x, &y, &classes(2)).unwrap();
    let Params::Forest { trees } = &m.params else { panic!() };
    assert!(trees.iter().all(|t| t.depth() <= 2));
}

#[test]
fn training_is_deterministic_and_round_trips() {
    let (x, y) = random_data(4, 40, 12, 3);
    for spec in all_specs(17) {
        let a = train(&spec, &x, &y, &classes(3)).unwrap();
        let b = train(&spec, &x, &y, &classes(3)).unwrap();
        let bytes = model_to_bytes(&a).unwrap();
        assert_eq!(bytes, model_to_bytes(&b).unwrap(), "{}", spec.label());
        let back: TrainedModel<f64> = model_from_bytes(&bytes).unwrap();
        assert_eq!(model_to_bytes(&back).unwrap(), bytes);
        for v in &x {
            assert_eq!(a.predict(v).unwrap(), back.predict(v).unwrap());
        }
    }
}

#[test]
fn model_file_on_disk() {
    let (x, y) = separable();
    let m = train(&ModelSpec::new(Algorithm::Ridge, 0), &x, &y, &classes(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.model");
    save_model(&m, &path).unwrap();
    let back: TrainedModel<f64> = load_model(&path).unwrap();
    assert_eq!(back, m);
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 2;
    bytes[last] ^= 1;
    assert!(matches!(model_from_bytes::<f64>(&bytes), Err(Error::ModelFormat(_))));
    assert!(matches!(model_from_bytes::<f64>(b"nope\n"), Err(Error::ModelFormat(_))));
}

#[test]
fn f32_models_train_and_predict() {
    let (x, y) = separable();
    let x32: Vec<SparseVector<f32>> = x.iter().map(|v| v.cast()).collect();
    for spec in all_specs(0) {
        let m = train(&spec, &x32, &y, &classes(2)).unwrap();
        let hits = x32.iter().zip(&y).filter(|(v, &c)| m.predict(v).unwrap().label == c).count();
        assert_eq!(hits, 20, "{}", spec.label());
    }
}

#[test]
fn errors_on_bad_input() {
    let (x, y) = separable();
    let spec = ModelSpec::new(Algorithm::MultinomialNb, 0);
    assert!(matches!(train(&spec, &x, &vec![0; 20], &classes(2)), Err(Error::Degenerate(_))));
    assert!(matches!(train(&spec, &x, &y[..3], &classes(2)), Err(Error::DimensionMismatch { .. })));
    assert!(train(&spec, &x, &y, &classes(1)).is_err());
    let m = train(&spec, &x, &y, &classes(2)).unwrap();
    assert!(matches!(m.predict(&sv(7, &[])), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn hyperparameters_from_strings() {
    let p: BTreeMap<String, String> = [("n_trees".to_string(), "4".to_string())].into();
    let spec = ModelSpec::with_params(Algorithm::RandomForest, &p, 0).unwrap();
    let (x, y) = separable();
    let Params::Forest { trees } = train(&spec, &x, &y, &classes(2)).unwrap().params else { panic!() };
    assert_eq!(trees.len(), 4);
}

fn baseline_micro_f(train_labels: &[usize], test_labels: &[usize], n_classes: usize, seeds: u64) -> f64 {
    let mut acc = 0.0;
    for seed in 0..seeds {
        let pred = stratified_random_baseline(train_labels, n_classes, test_labels.len(), seed).unwrap();
        let hits = pred.iter().zip(test_labels).filter(|(a, b)| a == b).count();
        acc += hits as f64 / test_labels.len() as f64;
    }
    acc / seeds as f64
}

#[test]
fn baseline_matches_sum_of_squared_proportions() {
    // class proportions 0.11 / 0.46 / 0.42 / 0.01 over 1000 users
    let counts = [110, 460, 420, 10];
    let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect();
    let expected: f64 = counts.iter().map(|&n| (n as f64 / 1000.0).powi(2)).sum();
    let got = baseline_micro_f(&labels, &labels, 4, 1000);
    assert!((got - expected).abs() < 0.015, "{got} vs {expected}");
    let balanced: Vec<usize> = (0..200).map(|i| i % 2).collect();
    let got = baseline_micro_f(&balanced, &balanced, 2, 1000);
    assert!((got - 0.5).abs() < 0.015, "{got}");
}

#[test]
fn baseline_single_class_is_constant() {
    let p = stratified_random_baseline(&[2, 2, 2], 4, 50, 1).unwrap();
    assert!(p.iter().all(|&c| c == 2));
    assert!(stratified_random_baseline(&[], 2, 5, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_argmax_survives_positive_scaling(seed in 0u64..1000, s in 0.01f64..100.0) {
        let (x, y) = random_data(seed, 30, 8, 3);
        for alg in [Algorithm::LinearSvmSgd, Algorithm::PassiveAggressive, Algorithm::Ridge] {
            let m = train(&ModelSpec::new(alg, seed), &x, &y, &classes(3)).unwrap();
            let m2 = m.scaled(s);
            let (q, _) = random_data(seed + 1, 10, 8, 3);
            for v in &q {
                prop_assert_eq!(m.predict(v).unwrap().label, m2.predict(v).unwrap().label);
            }
        }
    }

    #[test]
    fn label_is_argmax_of_scores(seed in 0u64..1000) {
        let (x, y) = random_data(seed, 24, 6, 2);
        for spec in all_specs(seed) {
            let m = train(&spec, &x, &y, &classes(2)).unwrap();
            for v in &x {
                let p = m.predict(v).unwrap();
                prop_assert_eq!(p.label, argmax(&p.scores));
                if p.calibrated {
                    let s: f64 = softmax(&p.scores).iter().sum();
                    prop_assert!((s - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
