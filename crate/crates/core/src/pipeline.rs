//! Training and prediction on token streams: preprocessing, a feature space
//! built from the training documents, and one classifier on top.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{balance_training, Corpus, Post};
use crate::error::{Error, Result};
use crate::features::{build_space, Extractor, FeatureKind, SpaceConfig};
use crate::learners::{self, ModelSpec, Prediction, TrainedModel};
use crate::scalar::Scalar;
use crate::textprep::{Preprocessor, TokenStream};
use crate::util;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextModelConfig {
    pub space: SpaceConfig,
    pub extractor: Extractor,
    pub model: ModelSpec,
    /// Oversample minority classes before building the space.
    #[serde(default)]
    pub balance: bool,
}

impl TextModelConfig {
    pub fn new(space: SpaceConfig, model: ModelSpec) -> Self {
        Self {
            space,
            extractor: Extractor::default(),
            model,
            balance: false,
        }
    }

    pub fn preprocessor(&self) -> Preprocessor {
        let base = if self.space.kinds.contains(&FeatureKind::Lint) {
            Preprocessor::with_lint()
        } else {
            Preprocessor::default()
        };
        Preprocessor {
            function_words: self.extractor.function_words.clone(),
            ..base
        }
    }
}

pub fn process_posts(prep: &Preprocessor, posts: &[&Post]) -> Vec<TokenStream> {
    posts.par_iter().map(|p| prep.process(&p.text)).collect()
}

/// Posts of labeled users in `users`, in corpus order, with their labels.
pub fn labeled_posts<'a>(
    corpus: &'a Corpus,
    users: &std::collections::BTreeSet<String>,
) -> (Vec<&'a Post>, Vec<usize>) {
    corpus
        .posts()
        .iter()
        .filter(|p| users.contains(&p.user_id))
        .filter_map(|p| corpus.user_label(&p.user_id).map(|y| (p, y)))
        .unzip()
}

/// Build a feature space on `docs` and train on their vectors.
pub fn fit<T: Scalar>(
    cfg: &TextModelConfig,
    docs: &[TokenStream],
    labels: &[usize],
    classes: &[String],
) -> Result<TrainedModel<T>> {
    if docs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: docs.len(),
            actual: labels.len(),
        });
    }
    let (docs, labels): (Vec<TokenStream>, Vec<usize>) = if cfg.balance {
        let idx: Vec<usize> = (0..docs.len()).collect();
        let (idx, labels) = balance_training(&idx, labels, classes.len(), util::derive_seed(cfg.model.seed, 0xba1))?;
        (idx.iter().map(|&i| docs[i].clone()).collect(), labels)
    } else {
        (docs.to_vec(), labels.to_vec())
    };
    let space = build_space(&docs, Some((&labels, classes.len())), &cfg.space, &cfg.extractor)?;
    if space.dim() == 0 {
        return Err(Error::InsufficientData("feature space is empty".into()));
    }
    let x: Vec<_> = docs.par_iter().map(|d| space.vectorize::<T>(d)).collect();
    Ok(learners::train(&cfg.model, &x, &labels, classes)?.with_space(space))
}

pub fn predict_docs<T: Scalar>(model: &TrainedModel<T>, docs: &[TokenStream]) -> Result<Vec<Prediction<T>>> {
    let space = model
        .space
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("model carries no feature space".into()))?;
    docs.par_iter().map(|d| model.predict(&space.vectorize::<T>(d))).collect()
}
