//! Metrics, grouped cross-validation and cross-domain evaluation.

mod crossdomain;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{class_counts, Fold};
use crate::error::{Error, Result};
use crate::features::FeatureSpace;
use crate::pipeline::{self, TextModelConfig};
use crate::scalar::Scalar;
use crate::textprep::TokenStream;

pub use crossdomain::{cross_domain_evaluate, load_foreign_corpus, AgeMapping, EvalUnit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<String>,
    pub n_instances: usize,
    pub accuracy: f64,
    /// From pooled per-class TP/FP/FN.
    pub micro_f: f64,
    pub macro_f: f64,
    /// Per-class F weighted by true-class support.
    pub weighted_f: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Expected micro-F of the stratified random baseline, when known.
    pub baseline_micro_f: Option<f64>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn compute_metrics(y_true: &[usize], y_pred: &[usize], classes: &[String]) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InsufficientData("no instances to score".into()));
    }
    let n = classes.len();
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&c| c >= n) {
        return Err(Error::UnknownClass(format!("class index {bad} outside {n} classes")));
    }
    let mut confusion = vec![vec![0usize; n]; n];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t][p] += 1;
    }
    let total = y_true.len();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|c| {
            let tp = confusion[c][c];
            let support: usize = confusion[c].iter().sum();
            let predicted: usize = confusion.iter().map(|r| r[c]).sum();
            tp_all += tp;
            fp_all += predicted - tp;
            fn_all += support - tp;
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassMetrics {
                class: classes[c].clone(),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support,
            }
        })
        .collect();
    let micro_f = harmonic(ratio(tp_all, tp_all + fp_all), ratio(tp_all, tp_all + fn_all));
    let macro_f = per_class.iter().map(|m| m.f1).sum::<f64>() / n as f64;
    let weighted_f = per_class.iter().map(|m| m.f1 * m.support as f64).sum::<f64>() / total as f64;
    Ok(MetricsReport {
        classes: classes.to_vec(),
        n_instances: total,
        accuracy: ratio(tp_all, total),
        micro_f,
        macro_f,
        weighted_f,
        per_class,
        confusion,
        baseline_micro_f: None,
    })
}

/// Expected micro-F of drawing labels from `train` proportions when the
/// truth follows `test` proportions.
pub fn stratified_baseline_expectation(train: &[usize], test: &[usize], n_classes: usize) -> f64 {
    let a = class_counts(train, n_classes);
    let b = class_counts(test, n_classes);
    (0..n_classes)
        .map(|c| ratio(a[c], train.len()) * ratio(b[c], test.len()))
        .sum()
}

impl MetricsReport {
    pub fn with_baseline(mut self, baseline_micro_f: f64) -> Self {
        self.baseline_micro_f = Some(baseline_micro_f);
        self
    }

    /// Header plus one row per class and an `all` row.
    pub fn to_csv(&self, scope: &str) -> String {
        let mut out = String::from(CSV_HEADER);
        self.write_csv_rows(scope, &mut out);
        out
    }

    pub fn write_csv_rows(&self, scope: &str, out: &mut String) {
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{scope},{},{:.6},{:.6},{:.6},{},,,",
                m.class, m.precision, m.recall, m.f1, m.support
            );
        }
        let _ = writeln!(
            out,
            "{scope},all,,,,{},{:.6},{:.6},{:.6}",
            self.n_instances, self.accuracy, self.micro_f, self.weighted_f
        );
    }
}

pub const CSV_HEADER: &str = "scope,class,precision,recall,f1,support,accuracy,micro_f,weighted_f\n";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub metrics: Option<MetricsReport>,
    /// Why the fold was not evaluated.
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldOutcome>,
    pub mean_accuracy: f64,
    pub mean_micro_f: f64,
    pub mean_weighted_f: f64,
    /// Feature space of each evaluated fold, for inspection.
    #[serde(skip)]
    pub spaces: Vec<Option<FeatureSpace>>,
}

impl CvReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        for f in &self.folds {
            if let Some(m) = &f.metrics {
                m.write_csv_rows(&format!("fold{}", f.fold), &mut out);
            }
        }
        let _ = writeln!(
            out,
            "mean,all,,,,,{:.6},{:.6},{:.6}",
            self.mean_accuracy, self.mean_micro_f, self.mean_weighted_f
        );
        out
    }
}

/// Grouped k-fold evaluation: `owners[i]` is the user of document `i`, and
/// each fold's feature space and model see only its training users.
pub fn cross_validate<T: Scalar>(
    docs: &[TokenStream],
    labels: &[usize],
    owners: &[String],
    folds: &[Fold],
    cfg: &TextModelConfig,
    classes: &[String],
) -> Result<CvReport> {
    if docs.len() != labels.len() || docs.len() != owners.len() {
        return Err(Error::DimensionMismatch {
            expected: docs.len(),
            actual: labels.len().min(owners.len()),
        });
    }
    let present: BTreeSet<usize> = labels.iter().copied().collect();
    let results: Vec<(FoldOutcome, Option<FeatureSpace>)> = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| -> Result<(FoldOutcome, Option<FeatureSpace>)> {
            let tr: Vec<usize> = (0..docs.len()).filter(|&j| fold.train.contains(&owners[j])).collect();
            let va: Vec<usize> = (0..docs.len())
                .filter(|&j| fold.validation.contains(&owners[j]))
                .collect();
            let mut outcome = FoldOutcome {
                fold: i,
                n_train: tr.len(),
                n_validation: va.len(),
                metrics: None,
                skipped: None,
            };
            let tr_classes: BTreeSet<usize> = tr.iter().map(|&j| labels[j]).collect();
            if tr_classes != present || va.is_empty() {
                let why = if va.is_empty() {
                    "no validation documents".to_string()
                } else {
                    format!("training part covers {} of {} classes", tr_classes.len(), present.len())
                };
                log::warn!("fold {i} skipped: {why}");
                outcome.skipped = Some(why);
                return Ok((outcome, None));
            }
            let tr_docs: Vec<TokenStream> = tr.iter().map(|&j| docs[j].clone()).collect();
            let tr_y: Vec<usize> = tr.iter().map(|&j| labels[j]).collect();
            let model = pipeline::fit::<T>(cfg, &tr_docs, &tr_y, classes)?;
            let va_docs: Vec<TokenStream> = va.iter().map(|&j| docs[j].clone()).collect();
            let va_y: Vec<usize> = va.iter().map(|&j| labels[j]).collect();
            let pred: Vec<usize> = pipeline::predict_docs(&model, &va_docs)?.iter().map(|p| p.label).collect();
            let m = compute_metrics(&va_y, &pred, classes)?
                .with_baseline(stratified_baseline_expectation(&tr_y, &va_y, classes.len()));
            outcome.metrics = Some(m);
            Ok((outcome, model.space))
        })
        .collect::<Result<_>>()?;
    let (folds, spaces): (Vec<FoldOutcome>, Vec<Option<FeatureSpace>>) = results.into_iter().unzip();
    let done: Vec<&MetricsReport> = folds.iter().filter_map(|f| f.metrics.as_ref()).collect();
    if done.is_empty() {
        return Err(Error::InsufficientData("every fold was skipped".into()));
    }
    let mean = |f: fn(&MetricsReport) -> f64| done.iter().map(|m| f(m)).sum::<f64>() / done.len() as f64;
    Ok(CvReport {
        mean_accuracy: mean(|m| m.accuracy),
        mean_micro_f: mean(|m| m.micro_f),
        mean_weighted_f: mean(|m| m.weighted_f),
        folds,
        spaces,
    })
}
