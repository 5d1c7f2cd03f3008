mod common;

use std::collections::BTreeSet;

use common::{planted, Planted, Signal};
use styloprof::aggregate::{run_message_based_pipeline, MessageBasedConfig};
use styloprof::corpus::{split_user_disjoint, Corpus, Partition, SplitAssignment};
use styloprof::evaluate::{cross_domain_evaluate, EvalUnit};
use styloprof::features::{FeatureKind, SpaceConfig};
use styloprof::learners::{Algorithm, ModelSpec};
use styloprof::pipeline::TextModelConfig;
use styloprof::userlevel::{run_user_based_pipeline, UserBasedConfig};

fn post_cfg(seed: u64) -> TextModelConfig {
    TextModelConfig::new(
        SpaceConfig {
            kinds: vec![FeatureKind::CharNgram],
            ..SpaceConfig::default()
        },
        ModelSpec::new(Algorithm::MultinomialNb, seed),
    )
}

fn message_cfg(seed: u64) -> MessageBasedConfig {
    MessageBasedConfig::new(post_cfg(seed), ModelSpec::new(Algorithm::RandomForest, seed))
}

fn split(c: &Corpus, seed: u64) -> SplitAssignment {
    let f = [(Partition::Train, 0.5), (Partition::Aggregation, 0.3), (Partition::Test, 0.2)];
    split_user_disjoint(c, &f, seed).unwrap().0
}

#[test]
fn separable_corpus_is_fully_recovered() {
    let mut p = Planted::new(60, Signal::Token, 1);
    p.leak = 1.0;
    p.posts = (5, 8);
    let c = planted(&p);
    let s = split(&c, 1);
    let m = run_message_based_pipeline::<f64>(&c, &s, &message_cfg(1)).unwrap();
    assert_eq!(m.user_metrics.accuracy, 1.0);
    assert_eq!(m.post_metrics.accuracy, 1.0);
    let mut ub = UserBasedConfig::single(post_cfg(1));
    ub.folds = 3;
    let u = run_user_based_pipeline::<f64>(&c, &s, &ub).unwrap();
    assert_eq!(u.metrics.accuracy, 1.0);
}

#[test]
fn both_pipelines_score_the_same_test_users() {
    let c = planted(&Planted::new(50, Signal::OpposingToken, 2));
    let s = split(&c, 2);
    let m = run_message_based_pipeline::<f64>(&c, &s, &message_cfg(2)).unwrap();
    let mut ub = UserBasedConfig::single(post_cfg(2));
    ub.folds = 0;
    let u = run_user_based_pipeline::<f64>(&c, &s, &ub).unwrap();
    let mu: BTreeSet<String> = m.user_predictions.iter().map(|p| p.user_id.clone()).collect();
    assert_eq!(mu, u.test_users);
    assert_eq!(mu, s.users_in(Partition::Test));
}

#[test]
fn reruns_reproduce_predictions() {
    let c = planted(&Planted::new(40, Signal::OpposingToken, 3));
    let s = split(&c, 3);
    let a = run_message_based_pipeline::<f64>(&c, &s, &message_cfg(3)).unwrap();
    let b = run_message_based_pipeline::<f64>(&c, &s, &message_cfg(3)).unwrap();
    assert_eq!(a.user_predictions, b.user_predictions);
    assert_eq!(a.model, b.model);
}

#[test]
fn shuffled_labels_fall_to_baseline() {
    let (mut msg, mut usr) = (0.0, 0.0);
    let shuffles = 20;
    for seed in 0..shuffles {
        let mut p = Planted::new(60, Signal::Token, 100 + seed);
        p.posts = (6, 10);
        p.shuffle_labels = true;
        let c = planted(&p);
        let s = split(&c, seed);
        msg += run_message_based_pipeline::<f64>(&c, &s, &message_cfg(seed)).unwrap().user_metrics.accuracy;
        let mut ub = UserBasedConfig::single(post_cfg(seed));
        ub.folds = 0;
        usr += run_user_based_pipeline::<f64>(&c, &s, &ub).unwrap().metrics.accuracy;
    }
    let (msg, usr) = (msg / shuffles as f64, usr / shuffles as f64);
    // balanced binary: the stratified baseline expects 0.5
    assert!((msg - 0.5).abs() < 0.1, "message-based {msg}");
    assert!((usr - 0.5).abs() < 0.1, "user-based {usr}");
}

#[test]
fn cross_domain_on_own_test_set_matches_in_domain() {
    let c = planted(&Planted::new(40, Signal::OpposingToken, 4));
    let s = split(&c, 4);
    let mut ub = UserBasedConfig::single(post_cfg(4));
    ub.folds = 0;
    let u = run_user_based_pipeline::<f64>(&c, &s, &ub).unwrap();
    let test = c.restrict_to_users(&u.test_users);
    let cd = cross_domain_evaluate(&u.model, &test, EvalUnit::User).unwrap();
    assert_eq!(cd.confusion, u.metrics.confusion);
    assert_eq!(cd.accuracy, u.metrics.accuracy);
}

#[test]
fn cross_domain_rejects_other_label_vocabulary() {
    let c = planted(&Planted::new(20, Signal::Token, 5));
    let s = split(&c, 5);
    let mut ub = UserBasedConfig::single(post_cfg(5));
    ub.folds = 0;
    let u = run_user_based_pipeline::<f64>(&c, &s, &ub).unwrap();
    let mut p = Planted::new(20, Signal::Token, 6);
    p.n_classes = 4;
    assert!(cross_domain_evaluate(&u.model, &planted(&p), EvalUnit::Post).is_err());
}

#[test]
fn message_based_lift_on_planted_corpus() {
    let c = planted(&Planted::new(200, Signal::OpposingToken, 7));
    let s = split(&c, 7);
    let m = run_message_based_pipeline::<f64>(&c, &s, &message_cfg(7)).unwrap();
    let mut ub = UserBasedConfig::single(post_cfg(7));
    ub.folds = 0;
    let u = run_user_based_pipeline::<f64>(&c, &s, &ub).unwrap();
    println!(
        "post {:.3} user(msg) {:.3} user(usr) {:.3}",
        m.post_metrics.accuracy, m.user_metrics.accuracy, u.metrics.accuracy
    );
    assert!(m.user_metrics.accuracy > m.post_metrics.accuracy);
}
