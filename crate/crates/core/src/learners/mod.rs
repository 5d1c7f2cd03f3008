//! Classifier suite with one train/predict contract, model files and the
//! stratified random baseline.

mod forest;
mod knn;
mod linear;
mod nb;
mod spec;

use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSpace, SparseVector};
use crate::scalar::{argmax, Scalar};
use crate::util;

pub use forest::{Node, Tree};
pub use spec::{Algorithm, Hyperparameters, KChoice, ModelSpec};

/// Label plus per-class decision scores (higher is more likely).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Prediction<T> {
    pub label: usize,
    pub scores: Vec<T>,
    /// True when `scores` are log-probabilities.
    pub calibrated: bool,
}

/// Learned parameters, per algorithm family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", bound = "T: Scalar")]
pub enum Params<T> {
    /// Multinomial NB: score = log prior + x · log-likelihood.
    /// Complement NB: score = -(x · normalized complement weights).
    NaiveBayes {
        complement: bool,
        log_prior: Vec<T>,
        weights: Vec<Vec<T>>,
    },
    Linear {
        weights: Vec<Vec<T>>,
        bias: Vec<T>,
    },
    Knn {
        k: usize,
        points: Vec<SparseVector<T>>,
        labels: Vec<usize>,
    },
    Forest {
        trees: Vec<Tree<T>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainedModel<T> {
    pub spec: ModelSpec,
    pub classes: Vec<String>,
    pub dim: usize,
    /// Present for models over text features; absent for models trained on
    /// derived vectors such as user prediction profiles.
    pub space: Option<FeatureSpace>,
    pub params: Params<T>,
}

fn validate<T: Scalar>(x: &[SparseVector<T>], y: &[usize], n_classes: usize) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if n_classes < 2 {
        return Err(Error::InvalidArgument("at least two classes are required".into()));
    }
    if x.len() < n_classes {
        return Err(Error::InsufficientData(format!(
            "{} training instances for {n_classes} classes",
            x.len()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range")));
    }
    let first = y[0];
    if y.iter().all(|&c| c == first) {
        return Err(Error::Degenerate("training labels contain a single class".into()));
    }
    let dim = x[0].dim();
    if let Some(v) = x.iter().find(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.dim(),
        });
    }
    if x.iter().any(|v| v.values().iter().any(|a| !a.is_finite())) {
        return Err(Error::NonFinite);
    }
    Ok(dim)
}

pub fn train<T: Scalar>(
    spec: &ModelSpec,
    x: &[SparseVector<T>],
    y: &[usize],
    classes: &[String],
) -> Result<TrainedModel<T>> {
    let n_classes = classes.len();
    let dim = validate(x, y, n_classes)?;
    let params = match &spec.hyper {
        Hyperparameters::NaiveBayes { alpha } => match spec.algorithm {
            Algorithm::ComplementNb => nb::train_complement(x, y, n_classes, dim, *alpha),
            _ => nb::train_multinomial(x, y, n_classes, dim, *alpha),
        }?,
        Hyperparameters::Sgd { lambda, epochs } => {
            linear::train_sgd(x, y, n_classes, dim, *lambda, *epochs, spec.seed)
        }
        Hyperparameters::PassiveAggressive { c, epochs } => {
            linear::train_pa(x, y, n_classes, dim, *c, *epochs, spec.seed)
        }
        Hyperparameters::Ridge { lambda, tol, max_iter } => {
            linear::train_ridge(x, y, n_classes, dim, *lambda, *tol, *max_iter)
        }
        Hyperparameters::Knn { k } => knn::train(x, y, n_classes, k, spec.seed)?,
        Hyperparameters::RandomForest {
            n_trees,
            max_depth,
            min_samples_split,
            max_features,
        } => forest::train(
            x,
            y,
            n_classes,
            dim,
            &forest::ForestConfig {
                n_trees: *n_trees,
                max_depth: *max_depth,
                min_samples_split: *min_samples_split,
                max_features: *max_features,
            },
            spec.seed,
        ),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        classes: classes.to_vec(),
        dim,
        space: None,
        params,
    })
}

impl<T: Scalar> TrainedModel<T> {
    pub fn with_space(mut self, space: FeatureSpace) -> Self {
        self.space = Some(space);
        self
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Raw decision scores and whether they are log-probabilities.
    pub fn decision(&self, x: &SparseVector<T>) -> Result<(Vec<T>, bool)> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        let c = self.n_classes();
        Ok(match &self.params {
            Params::NaiveBayes {
                complement,
                log_prior,
                weights,
            } => (nb::scores(*complement, log_prior, weights, x), true),
            Params::Linear { weights, bias } => (
                weights
                    .iter()
                    .zip(bias)
                    .map(|(w, &b)| x.dot_dense(w) + b)
                    .collect(),
                false,
            ),
            Params::Knn { k, points, labels } => (knn::scores(*k, points, labels, c, x), false),
            Params::Forest { trees } => (forest::scores(trees, c, x), false),
        })
    }

    pub fn predict(&self, x: &SparseVector<T>) -> Result<Prediction<T>> {
        let (scores, calibrated) = self.decision(x)?;
        Ok(Prediction {
            label: argmax(&scores),
            scores,
            calibrated,
        })
    }

    pub fn predict_batch(&self, xs: &[SparseVector<T>]) -> Result<Vec<Prediction<T>>> {
        use rayon::prelude::*;
        xs.par_iter().map(|x| self.predict(x)).collect()
    }

    /// Scale linear weights and biases by `s`; other families are unchanged.
    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        if let Params::Linear { weights, bias } = &mut out.params {
            for w in weights.iter_mut() {
                w.iter_mut().for_each(|v| *v = *v * s);
            }
            bias.iter_mut().for_each(|v| *v = *v * s);
        }
        out
    }
}

pub const MODEL_MAGIC: &str = "STYLOPROF1";

/// Serialize as magic line, checksum line, then a JSON body.
pub fn to_container<S: Serialize>(value: &S) -> Result<Vec<u8>> {
    let body = serde_json::to_vec(value)?;
    let mut out = format!("{MODEL_MAGIC}\nsha256:{}\n", util::sha256_hex(&body)).into_bytes();
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn from_container<D: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<D> {
    let mut parts = bytes.splitn(3, |&b| b == b'\n');
    let magic = parts.next().unwrap_or_default();
    if magic != MODEL_MAGIC.as_bytes() {
        return Err(Error::ModelFormat("missing STYLOPROF1 header".into()));
    }
    let sum = parts
        .next()
        .and_then(|l| std::str::from_utf8(l).ok())
        .and_then(|l| l.strip_prefix("sha256:"))
        .ok_or_else(|| Error::ModelFormat("missing checksum line".into()))?;
    let body = parts.next().unwrap_or_default();
    if util::sha256_hex(body) != sum {
        return Err(Error::ModelFormat("checksum mismatch".into()));
    }
    serde_json::from_slice(body).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn model_to_bytes<T: Scalar>(model: &TrainedModel<T>) -> Result<Vec<u8>> {
    to_container(model)
}

pub fn model_from_bytes<T: Scalar>(bytes: &[u8]) -> Result<TrainedModel<T>> {
    from_container(bytes)
}

pub fn save_model<T: Scalar>(model: &TrainedModel<T>, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<TrainedModel<T>> {
    model_from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Draws i.i.d. from the empirical training label distribution.
pub fn stratified_random_baseline(
    train_labels: &[usize],
    n_classes: usize,
    test_size: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if train_labels.is_empty() {
        return Err(Error::InsufficientData("no training labels".into()));
    }
    let counts = crate::corpus::class_counts(train_labels, n_classes.max(1 + train_labels.iter().max().unwrap()));
    let dist = WeightedIndex::new(&counts).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = util::rng(seed);
    Ok((0..test_size).map(|_| dist.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests;
