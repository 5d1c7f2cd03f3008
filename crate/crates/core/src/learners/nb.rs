use super::Params;
use crate::error::Result;
use crate::features::SparseVector;
use crate::scalar::Scalar;

fn class_feature_counts<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    dim: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut counts = vec![vec![0.0; dim]; n_classes];
    let mut docs = vec![0usize; n_classes];
    for (v, &c) in x.iter().zip(y) {
        docs[c] += 1;
        for (i, a) in v.iter() {
            counts[c][i] += a.as_f64();
        }
    }
    (counts, docs)
}

fn log_or_floor(p: f64) -> f64 {
    // keeps absent classes finite so the model stays serializable
    p.max(f64::MIN_POSITIVE).ln()
}

pub(super) fn train_multinomial<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    dim: usize,
    alpha: f64,
) -> Result<Params<T>> {
    let (counts, docs) = class_feature_counts(x, y, n_classes, dim);
    let n = x.len() as f64;
    let log_prior = docs.iter().map(|&d| T::of(log_or_floor(d as f64 / n))).collect();
    let weights = counts
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + alpha * dim as f64;
            row.iter().map(|&c| T::of(((c + alpha) / total).ln())).collect()
        })
        .collect();
    Ok(Params::NaiveBayes {
        complement: false,
        log_prior,
        weights,
    })
}

/// Complement weights, log-normalized per class.
pub(super) fn train_complement<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    dim: usize,
    alpha: f64,
) -> Result<Params<T>> {
    let (counts, _) = class_feature_counts(x, y, n_classes, dim);
    let all: Vec<f64> = (0..dim).map(|f| counts.iter().map(|r| r[f]).sum()).collect();
    let weights = counts
        .iter()
        .map(|row| {
            let comp: Vec<f64> = all.iter().zip(row).map(|(a, r)| a - r + alpha).collect();
            let total: f64 = comp.iter().sum();
            let logged: Vec<f64> = comp.iter().map(|c| (c / total).ln()).collect();
            let norm: f64 = logged.iter().map(|v| v.abs()).sum();
            logged.iter().map(|&w| T::of(w / norm)).collect()
        })
        .collect();
    Ok(Params::NaiveBayes {
        complement: true,
        log_prior: vec![T::zero(); n_classes],
        weights,
    })
}

/// Log-posterior scores: joint log-likelihoods shifted by their log-sum-exp.
pub(super) fn scores<T: Scalar>(
    complement: bool,
    log_prior: &[T],
    weights: &[Vec<T>],
    x: &SparseVector<T>,
) -> Vec<T> {
    let jll: Vec<f64> = weights
        .iter()
        .zip(log_prior)
        .map(|(w, &p)| {
            let dot: f64 = x.iter().map(|(i, v)| v.as_f64() * w[i].as_f64()).sum();
            if complement {
                -dot
            } else {
                p.as_f64() + dot
            }
        })
        .collect();
    let max = jll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + jll.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    jll.into_iter().map(|v| T::of(v - lse)).collect()
}
