//! Message-based scheme: post-level predictions become per-user profiles,
//! and a meta-classifier trained on profiles labels the users.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::ArtifactMeta;
use crate::corpus::{class_counts, kfold_ids, Corpus, Partition, SplitAssignment};
use crate::error::{Error, Result};
use crate::evaluate::{compute_metrics, stratified_baseline_expectation, MetricsReport};
use crate::features::SparseVector;
use crate::learners::{self, ModelSpec, Prediction, TrainedModel};
use crate::pipeline::{self, TextModelConfig};
use crate::scalar::{argmax, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileFeatures {
    /// Proportions, mean decision scores and log post count.
    #[default]
    Full,
    LabelsOnly,
}

impl ProfileFeatures {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Self::Full),
            "labels-only" | "labels_only" => Some(Self::LabelsOnly),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::LabelsOnly => "labels-only",
        }
    }

    pub fn dim(self, n_classes: usize) -> usize {
        match self {
            Self::Full => 2 * n_classes + 1,
            Self::LabelsOnly => n_classes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserPredictionProfile {
    pub user_id: String,
    pub label_proportions: Vec<f64>,
    pub mean_scores: Vec<f64>,
    pub post_count: usize,
}

impl UserPredictionProfile {
    pub fn to_vector<T: Scalar>(&self, mode: ProfileFeatures) -> Result<SparseVector<T>> {
        let mut dense: Vec<T> = self.label_proportions.iter().map(|&p| T::of(p)).collect();
        if mode == ProfileFeatures::Full {
            dense.extend(self.mean_scores.iter().map(|&s| T::of(s)));
            dense.push(T::of((self.post_count as f64).ln()));
        }
        SparseVector::from_dense(&dense)
    }
}

/// Post prediction keyed by post id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PostPrediction<T> {
    pub post_id: String,
    pub prediction: Prediction<T>,
}

/// One profile per user with at least one prediction, sorted by user id.
/// Within a user, posts are summed in post-id order, so the result does
/// not depend on the order of `predictions`.
pub fn build_profiles<T: Scalar>(
    corpus: &Corpus,
    predictions: &[PostPrediction<T>],
    n_classes: usize,
) -> Result<Vec<UserPredictionProfile>> {
    let owner: BTreeMap<&str, &str> = corpus
        .posts()
        .iter()
        .map(|p| (p.post_id.as_str(), p.user_id.as_str()))
        .collect();
    let mut per_user: BTreeMap<&str, Vec<&PostPrediction<T>>> = BTreeMap::new();
    for p in predictions {
        let user = owner
            .get(p.post_id.as_str())
            .ok_or_else(|| Error::InvalidArgument(format!("prediction for unknown post {:?}", p.post_id)))?;
        if p.prediction.scores.len() != n_classes || p.prediction.label >= n_classes {
            return Err(Error::DimensionMismatch {
                expected: n_classes,
                actual: p.prediction.scores.len(),
            });
        }
        per_user.entry(user).or_default().push(p);
    }
    Ok(per_user
        .into_par_iter()
        .map(|(user, mut preds)| {
            preds.sort_by(|a, b| a.post_id.cmp(&b.post_id));
            let n = preds.len();
            let mut counts = vec![0usize; n_classes];
            let mut sums = vec![0.0f64; n_classes];
            for p in &preds {
                counts[p.prediction.label] += 1;
                for (s, v) in sums.iter_mut().zip(&p.prediction.scores) {
                    *s += v.as_f64();
                }
            }
            UserPredictionProfile {
                user_id: user.to_string(),
                label_proportions: counts.iter().map(|&c| c as f64 / n as f64).collect(),
                mean_scores: sums.iter().map(|s| s / n as f64).collect(),
                post_count: n,
            }
        })
        .collect())
}

/// Meta-classifier over profiles. When the profiles carry no signal (a
/// single class, or all vectors equal) it predicts the majority class and
/// sets `degenerate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Ensemble<T> {
    pub classes: Vec<String>,
    pub mode: ProfileFeatures,
    pub model: Option<TrainedModel<T>>,
    pub class_frequencies: Vec<f64>,
    pub degenerate: bool,
}

pub fn train_ensemble<T: Scalar>(
    profiles: &[UserPredictionProfile],
    labels: &[usize],
    classes: &[String],
    spec: &ModelSpec,
    mode: ProfileFeatures,
) -> Result<Ensemble<T>> {
    if profiles.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: profiles.len(),
            actual: labels.len(),
        });
    }
    if profiles.is_empty() {
        return Err(Error::InsufficientData("no aggregation profiles".into()));
    }
    let x: Vec<SparseVector<T>> = profiles.iter().map(|p| p.to_vector(mode)).collect::<Result<_>>()?;
    let counts = class_counts(labels, classes.len());
    let class_frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / labels.len() as f64).collect();
    let single_class = counts.iter().filter(|&&c| c > 0).count() < 2;
    let constant = x.iter().all(|v| *v == x[0]);
    let model = if single_class || constant || profiles.len() < classes.len() {
        log::warn!("ensemble degenerates to the majority class: profiles carry no usable signal");
        None
    } else {
        Some(learners::train(spec, &x, labels, classes)?)
    };
    Ok(Ensemble {
        classes: classes.to_vec(),
        mode,
        degenerate: model.is_none(),
        model,
        class_frequencies,
    })
}

impl<T: Scalar> Ensemble<T> {
    pub fn predict(&self, profile: &UserPredictionProfile) -> Result<Prediction<T>> {
        match &self.model {
            Some(m) => m.predict(&profile.to_vector(self.mode)?),
            None => {
                let scores: Vec<T> = self.class_frequencies.iter().map(|&f| T::of(f)).collect();
                Ok(Prediction {
                    label: argmax(&scores),
                    scores,
                    calibrated: false,
                })
            }
        }
    }
}

/// Mean accuracy of the ensemble over user-grouped folds of labeled profiles.
pub fn cross_validate_ensemble<T: Scalar>(
    profiles: &[UserPredictionProfile],
    labels: &[usize],
    classes: &[String],
    spec: &ModelSpec,
    mode: ProfileFeatures,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let ids: Vec<String> = profiles.iter().map(|p| p.user_id.clone()).collect();
    let folds = kfold_ids(&ids, folds, seed)?;
    let accs: Vec<f64> = folds
        .par_iter()
        .map(|f| -> Result<f64> {
            let (tr, va): (Vec<usize>, Vec<usize>) = (0..profiles.len()).partition(|&i| f.train.contains(&ids[i]));
            let tp: Vec<UserPredictionProfile> = tr.iter().map(|&i| profiles[i].clone()).collect();
            let ty: Vec<usize> = tr.iter().map(|&i| labels[i]).collect();
            let e = train_ensemble::<T>(&tp, &ty, classes, spec, mode)?;
            let mut hits = 0;
            for &i in &va {
                hits += (e.predict(&profiles[i])?.label == labels[i]) as usize;
            }
            Ok(hits as f64 / va.len().max(1) as f64)
        })
        .collect::<Result<_>>()?;
    Ok(accs.iter().sum::<f64>() / accs.len() as f64)
}

/// User-level output record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct UserPrediction<T> {
    pub user_id: String,
    pub predicted_label: String,
    #[serde(skip)]
    pub label: usize,
    pub scores: Vec<T>,
    pub post_count: usize,
}

pub(crate) fn user_predictions<T: Scalar>(
    ids: &[(String, usize)],
    preds: Vec<Prediction<T>>,
    classes: &[String],
) -> Vec<UserPrediction<T>> {
    ids.iter()
        .zip(preds)
        .map(|((user_id, post_count), p)| UserPrediction {
            user_id: user_id.clone(),
            predicted_label: classes[p.label].clone(),
            label: p.label,
            scores: p.scores,
            post_count: *post_count,
        })
        .collect()
}

pub fn write_user_predictions<T: Scalar>(
    preds: &[UserPrediction<T>],
    path: &Path,
    meta: Option<&ArtifactMeta>,
) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    if let Some(m) = meta {
        m.write_line(&mut w).map_err(|e| Error::io(path, e))?;
    }
    for p in preds {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageBasedConfig {
    pub post: TextModelConfig,
    pub ensemble: ModelSpec,
    pub profile_features: ProfileFeatures,
    /// Retrain the post model on training plus aggregation users before
    /// predicting test posts.
    pub retrain: bool,
    /// Folds for the ensemble's CV estimate on the aggregation users; 0 skips.
    pub ensemble_cv_folds: usize,
}

impl MessageBasedConfig {
    pub fn new(post: TextModelConfig, ensemble: ModelSpec) -> Self {
        Self {
            post,
            ensemble,
            profile_features: ProfileFeatures::Full,
            retrain: true,
            ensemble_cv_folds: 0,
        }
    }
}

/// Post model plus ensemble: everything needed to label unseen users.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MessageBasedModel<T> {
    pub post_model: TrainedModel<T>,
    pub ensemble: Ensemble<T>,
}

impl<T: Scalar> MessageBasedModel<T> {
    /// Predict every post of the given users (all users when `None`), then
    /// label each user from its profile. Labels in `corpus` are not read.
    pub fn predict_users(
        &self,
        corpus: &Corpus,
        users: Option<&BTreeSet<String>>,
    ) -> Result<(Vec<UserPrediction<T>>, Vec<PostPrediction<T>>)> {
        let posts: Vec<_> = corpus
            .posts()
            .iter()
            .filter(|p| users.is_none_or(|u| u.contains(&p.user_id)))
            .collect();
        let prep = self
            .post_model
            .space
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("post model carries no feature space".into()))?
            .preprocessor();
        let docs = pipeline::process_posts(&prep, &posts);
        let post_preds: Vec<PostPrediction<T>> = pipeline::predict_docs(&self.post_model, &docs)?
            .into_iter()
            .zip(&posts)
            .map(|(prediction, p)| PostPrediction {
                post_id: p.post_id.clone(),
                prediction,
            })
            .collect();
        let profiles = build_profiles(corpus, &post_preds, self.post_model.n_classes())?;
        let preds: Vec<Prediction<T>> = profiles.iter().map(|p| self.ensemble.predict(p)).collect::<Result<_>>()?;
        let ids: Vec<(String, usize)> = profiles.iter().map(|p| (p.user_id.clone(), p.post_count)).collect();
        Ok((user_predictions(&ids, preds, &self.ensemble.classes), post_preds))
    }
}

pub struct MessageBasedOutcome<T> {
    pub model: MessageBasedModel<T>,
    pub user_predictions: Vec<UserPrediction<T>>,
    pub post_metrics: MetricsReport,
    pub user_metrics: MetricsReport,
    pub ensemble_cv_accuracy: Option<f64>,
}

fn partition_users(corpus: &Corpus, split: &SplitAssignment, p: Partition) -> BTreeSet<String> {
    split
        .users_in(p)
        .into_iter()
        .filter(|u| corpus.user_label(u).is_some())
        .collect()
}

/// Train on Train, profile Aggregation to fit the ensemble, then label Test
/// users; test labels are only read for the final metrics.
pub fn run_message_based_pipeline<T: Scalar>(
    corpus: &Corpus,
    split: &SplitAssignment,
    cfg: &MessageBasedConfig,
) -> Result<MessageBasedOutcome<T>> {
    let task = corpus
        .label_task()
        .ok_or_else(|| Error::InvalidArgument("corpus has no label task".into()))?;
    let classes = task.class_names();
    let train_u = partition_users(corpus, split, Partition::Train);
    let agg_u = partition_users(corpus, split, Partition::Aggregation);
    let test_u = partition_users(corpus, split, Partition::Test);
    for (name, set) in [("train", &train_u), ("aggregation", &agg_u), ("test", &test_u)] {
        if set.is_empty() {
            return Err(Error::InvalidArgument(format!("split has no labeled {name} users")));
        }
    }
    let prep = cfg.post.preprocessor();
    let (tr_posts, tr_y) = pipeline::labeled_posts(corpus, &train_u);
    let tr_docs = pipeline::process_posts(&prep, &tr_posts);
    let stage1 = pipeline::fit::<T>(&cfg.post, &tr_docs, &tr_y, &classes)?;

    let interim = MessageBasedModel {
        post_model: stage1,
        ensemble: Ensemble {
            classes: classes.clone(),
            mode: cfg.profile_features,
            model: None,
            class_frequencies: vec![0.0; classes.len()],
            degenerate: true,
        },
    };
    let (_, agg_post_preds) = interim.predict_users(corpus, Some(&agg_u))?;
    let profiles = build_profiles(corpus, &agg_post_preds, classes.len())?;
    if profiles.is_empty() {
        return Err(Error::InsufficientData("no aggregation profiles".into()));
    }
    let agg_y: Vec<usize> = profiles.iter().map(|p| corpus.user_label(&p.user_id).unwrap()).collect();
    let ensemble = train_ensemble::<T>(&profiles, &agg_y, &classes, &cfg.ensemble, cfg.profile_features)?;
    let ensemble_cv_accuracy = if cfg.ensemble_cv_folds >= 2 && profiles.len() >= cfg.ensemble_cv_folds {
        Some(cross_validate_ensemble::<T>(
            &profiles,
            &agg_y,
            &classes,
            &cfg.ensemble,
            cfg.profile_features,
            cfg.ensemble_cv_folds,
            cfg.ensemble.seed,
        )?)
    } else {
        None
    };

    let post_model = if cfg.retrain {
        let both: BTreeSet<String> = train_u.union(&agg_u).cloned().collect();
        let (posts, y) = pipeline::labeled_posts(corpus, &both);
        pipeline::fit::<T>(&cfg.post, &pipeline::process_posts(&prep, &posts), &y, &classes)?
    } else {
        interim.post_model
    };
    let model = MessageBasedModel { post_model, ensemble };
    let (user_predictions, test_post_preds) = model.predict_users(corpus, Some(&test_u))?;

    // metrics: the only place test labels are read
    let owner: BTreeMap<&str, &str> = corpus
        .posts()
        .iter()
        .map(|p| (p.post_id.as_str(), p.user_id.as_str()))
        .collect();
    let post_true: Vec<usize> = test_post_preds
        .iter()
        .map(|p| corpus.user_label(owner[p.post_id.as_str()]).unwrap())
        .collect();
    let post_pred: Vec<usize> = test_post_preds.iter().map(|p| p.prediction.label).collect();
    let post_metrics = compute_metrics(&post_true, &post_pred, &classes)?
        .with_baseline(stratified_baseline_expectation(&tr_y, &post_true, classes.len()));
    let user_true: Vec<usize> = user_predictions
        .iter()
        .map(|p| corpus.user_label(&p.user_id).unwrap())
        .collect();
    let user_pred: Vec<usize> = user_predictions.iter().map(|p| p.label).collect();
    let user_metrics = compute_metrics(&user_true, &user_pred, &classes)?
        .with_baseline(stratified_baseline_expectation(&agg_y, &user_true, classes.len()));
    Ok(MessageBasedOutcome {
        model,
        user_predictions,
        post_metrics,
        user_metrics,
        ensemble_cv_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Post, UserRecord};
    use crate::learners::Algorithm;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn corpus_with(users: &[(&str, usize)]) -> Corpus {
        let mut posts = Vec::new();
        for (u, n) in users {
            for i in 0..*n {
                posts.push(Post {
                    post_id: format!("{u}-{i}"),
                    user_id: u.to_string(),
                    text: "x".into(),
                    forum: None,
                    timestamp: None,
                });
            }
        }
        Corpus::new(posts, users.iter().map(|(u, _)| UserRecord::new(*u)), None).unwrap()
    }

    fn pp(post_id: &str, label: usize, scores: Vec<f64>) -> PostPrediction<f64> {
        PostPrediction {
            post_id: post_id.into(),
            prediction: Prediction {
                label,
                scores,
                calibrated: false,
            },
        }
    }

    #[test]
    fn proportions_count_predicted_labels() {
        let c = corpus_with(&[("u", 3), ("v", 1)]);
        let preds = vec![
            pp("u-0", 0, vec![1.0, 0.0]),
            pp("u-1", 0, vec![0.5, 0.2]),
            pp("u-2", 1, vec![0.0, 1.0]),
            pp("v-0", 1, vec![0.0, 2.0]),
        ];
        let p = build_profiles(&c, &preds, 2).unwrap();
        assert_eq!(p[0].label_proportions, vec![2.0 / 3.0, 1.0 / 3.0]);
        assert!((p[0].mean_scores[0] - 0.5).abs() < 1e-12);
        assert_eq!(p[1].label_proportions, vec![0.0, 1.0]);
        assert_eq!(p[1].post_count, 1);
        assert_eq!(p[0].to_vector::<f64>(ProfileFeatures::Full).unwrap().dim(), 5);
        assert_eq!(p[0].to_vector::<f64>(ProfileFeatures::LabelsOnly).unwrap().dim(), 2);
        assert!(build_profiles(&c, &[pp("nope", 0, vec![0.0, 0.0])], 2).is_err());
    }

    #[test]
    fn profiles_match_group_by_and_ignore_order() {
        let mut rng = crate::util::rng(1);
        let users: Vec<(String, usize)> = (0..100).map(|i| (format!("u{i:03}"), rng.gen_range(1..8))).collect();
        let refs: Vec<(&str, usize)> = users.iter().map(|(u, n)| (u.as_str(), *n)).collect();
        let c = corpus_with(&refs);
        let mut preds: Vec<PostPrediction<f64>> = c
            .posts()
            .iter()
            .map(|p| {
                let l = rng.gen_range(0..3);
                pp(&p.post_id, l, (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            })
            .collect();
        let a = build_profiles(&c, &preds, 3).unwrap();
        assert_eq!(a.len(), 100);
        for prof in &a {
            let mine: Vec<&PostPrediction<f64>> =
                preds.iter().filter(|p| p.post_id.starts_with(&format!("{}-", prof.user_id))).collect();
            assert_eq!(prof.post_count, mine.len());
            for c in 0..3 {
                let n = mine.iter().filter(|p| p.prediction.label == c).count();
                assert!((prof.label_proportions[c] - n as f64 / mine.len() as f64).abs() < 1e-12);
            }
            assert!((prof.label_proportions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        preds.shuffle(&mut rng);
        assert_eq!(build_profiles(&c, &preds, 3).unwrap(), a);
    }

    fn profile(id: usize, props: [f64; 2]) -> UserPredictionProfile {
        UserPredictionProfile {
            user_id: format!("u{id:03}"),
            label_proportions: props.to_vec(),
            mean_scores: props.to_vec(),
            post_count: 10,
        }
    }

    #[test]
    fn majority_signal_is_recovered() {
        let mut rng = crate::util::rng(3);
        let mut ps = Vec::new();
        let mut ys = Vec::new();
        for i in 0..60 {
            let y = i % 2;
            let maj = rng.gen_range(0.55..1.0);
            let props = if y == 0 { [maj, 1.0 - maj] } else { [1.0 - maj, maj] };
            ps.push(profile(i, props));
            ys.push(y);
        }
        let classes = vec!["a".to_string(), "b".to_string()];
        let spec = ModelSpec::new(Algorithm::RandomForest, 1);
        let acc = cross_validate_ensemble::<f64>(&ps, &ys, &classes, &spec, ProfileFeatures::LabelsOnly, 5, 2).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn constant_profiles_degenerate_to_majority() {
        let ps: Vec<_> = (0..9).map(|i| profile(i, [0.5, 0.5])).collect();
        let ys = vec![0, 1, 1, 1, 0, 1, 1, 0, 1];
        let classes = vec!["a".to_string(), "b".to_string()];
        let e = train_ensemble::<f64>(&ps, &ys, &classes, &ModelSpec::new(Algorithm::PassiveAggressive, 0), ProfileFeatures::Full)
            .unwrap();
        assert!(e.degenerate);
        assert_eq!(e.predict(&profile(99, [0.9, 0.1])).unwrap().label, 1);
    }
}
