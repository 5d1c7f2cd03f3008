//! User-based baseline: one merged document per user, classified directly.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{user_predictions, UserPrediction};
use crate::corpus::{kfold_ids, Corpus, Partition, SplitAssignment};
use crate::error::{Error, Result};
use crate::evaluate::{compute_metrics, cross_validate, stratified_baseline_expectation, CvReport, MetricsReport};
use crate::learners::TrainedModel;
use crate::pipeline::{self, TextModelConfig};
use crate::scalar::Scalar;
use crate::textprep::{Preprocessor, TokenStream};

#[derive(Clone, Debug, PartialEq)]
pub struct UserDocument {
    pub user_id: String,
    pub stream: TokenStream,
    pub label: Option<usize>,
    pub post_count: usize,
}

/// One document per user, posts ordered by timestamp then post id. With
/// `boundary` set, character n-grams and bigrams stay inside each post;
/// otherwise the posts read as one text joined by single spaces.
pub fn merge_user_documents(corpus: &Corpus, prep: &Preprocessor, boundary: bool) -> Vec<UserDocument> {
    let by_user = corpus.posts_by_user();
    let posts = corpus.posts();
    let groups: Vec<(&str, Vec<usize>)> = by_user.into_iter().collect();
    groups
        .into_par_iter()
        .map(|(user, mut idx)| {
            idx.sort_by(|&a, &b| {
                let (pa, pb) = (&posts[a], &posts[b]);
                pa.timestamp
                    .cmp(&pb.timestamp)
                    .then_with(|| pa.post_id.cmp(&pb.post_id))
            });
            let streams: Vec<TokenStream> = idx.iter().map(|&i| prep.process(&posts[i].text)).collect();
            let mut stream = TokenStream::merge(&streams);
            if !boundary {
                stream.texts = vec![stream.texts.join(" ")];
                stream.post_starts = vec![0];
            }
            UserDocument {
                user_id: user.to_string(),
                stream,
                label: corpus.user_label(user),
                post_count: idx.len(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserBasedConfig {
    /// Candidate settings compared by cross-validation inside training.
    pub candidates: Vec<TextModelConfig>,
    /// Folds for candidate selection; below 2 skips it and uses the first.
    pub folds: usize,
    pub cv_seed: u64,
    pub boundary: bool,
}

impl UserBasedConfig {
    pub fn single(cfg: TextModelConfig) -> Self {
        Self {
            candidates: vec![cfg],
            folds: 10,
            cv_seed: 0,
            boundary: true,
        }
    }
}

pub struct UserBasedOutcome<T> {
    pub cv: Vec<CvReport>,
    pub selected: usize,
    pub model: TrainedModel<T>,
    pub test_users: BTreeSet<String>,
    pub user_predictions: Vec<UserPrediction<T>>,
    pub metrics: MetricsReport,
}

/// Select a candidate by CV on the non-test users, retrain it on all of
/// them and classify each test user's merged document.
pub fn run_user_based_pipeline<T: Scalar>(
    corpus: &Corpus,
    split: &SplitAssignment,
    cfg: &UserBasedConfig,
) -> Result<UserBasedOutcome<T>> {
    let task = corpus
        .label_task()
        .ok_or_else(|| Error::InvalidArgument("corpus has no label task".into()))?;
    let classes = task.class_names();
    let first = cfg
        .candidates
        .first()
        .ok_or_else(|| Error::InvalidArgument("no candidate configurations".into()))?;
    let split = split.collapse_aggregation();
    let train_users = split.users_in(Partition::Train);
    let test_users = split.users_in(Partition::Test);
    if test_users.is_empty() {
        return Err(Error::InvalidArgument("split has no test partition".into()));
    }
    let labeled = corpus.labeled_only();
    let docs = merge_user_documents(&labeled, &first.preprocessor(), cfg.boundary);
    let (train, test): (Vec<&UserDocument>, Vec<&UserDocument>) = docs
        .iter()
        .filter(|d| train_users.contains(&d.user_id) || test_users.contains(&d.user_id))
        .partition(|d| train_users.contains(&d.user_id));
    let tr_docs: Vec<TokenStream> = train.iter().map(|d| d.stream.clone()).collect();
    let tr_y: Vec<usize> = train.iter().map(|d| d.label.unwrap()).collect();
    let owners: Vec<String> = train.iter().map(|d| d.user_id.clone()).collect();

    let mut cv = Vec::new();
    let mut selected = 0;
    if cfg.folds >= 2 {
        let folds = kfold_ids(&owners, cfg.folds, cfg.cv_seed)?;
        for cand in &cfg.candidates {
            cv.push(cross_validate::<T>(&tr_docs, &tr_y, &owners, &folds, cand, &classes)?);
        }
        selected = (0..cv.len()).fold(0, |b, i| if cv[i].mean_micro_f > cv[b].mean_micro_f { i } else { b });
        log::info!(
            "user-based: selected candidate {selected} (cv micro-F {:.4})",
            cv[selected].mean_micro_f
        );
    }
    let chosen = &cfg.candidates[selected];
    let (tr_docs, te_docs): (Vec<TokenStream>, Vec<TokenStream>) = if selected == 0 {
        (tr_docs, test.iter().map(|d| d.stream.clone()).collect())
    } else {
        // the preprocessor may differ between candidates
        let docs = merge_user_documents(&labeled, &chosen.preprocessor(), cfg.boundary);
        let get = |ids: &[&UserDocument]| -> Vec<TokenStream> {
            ids.iter()
                .map(|u| docs.iter().find(|d| d.user_id == u.user_id).unwrap().stream.clone())
                .collect()
        };
        (get(&train), get(&test))
    };
    let model = pipeline::fit::<T>(chosen, &tr_docs, &tr_y, &classes)?;
    let preds = pipeline::predict_docs(&model, &te_docs)?;
    let ids: Vec<(String, usize)> = test.iter().map(|d| (d.user_id.clone(), d.post_count)).collect();
    let user_predictions = user_predictions(&ids, preds, &classes);
    // labels are read only from here on
    let te_y: Vec<usize> = test.iter().map(|d| d.label.unwrap()).collect();
    let pred: Vec<usize> = user_predictions.iter().map(|p| p.label).collect();
    let metrics = compute_metrics(&te_y, &pred, &classes)?
        .with_baseline(stratified_baseline_expectation(&tr_y, &te_y, classes.len()));
    Ok(UserBasedOutcome {
        cv,
        selected,
        model,
        test_users: test.iter().map(|d| d.user_id.clone()).collect(),
        user_predictions,
        metrics,
    })
}
