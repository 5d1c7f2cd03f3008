//! Bagged CART trees with Gini splits and per-node feature subsampling.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Params;
use crate::features::SparseVector;
use crate::scalar::Scalar;
use crate::util;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum Node<T> {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        dist: Vec<T>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn leaf_dist(&self, x: &SparseVector<T>) -> &[T] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x.get(*feature) <= *threshold { *left } else { *right },
                Node::Leaf { dist } => return dist,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }
}

pub(super) struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: Option<usize>,
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best threshold on one feature: midpoints between consecutive distinct
/// values, scored by weighted Gini decrease.
fn best_threshold<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    samples: &[usize],
    feature: usize,
    n_classes: usize,
    parent: f64,
) -> Option<Split> {
    let mut vals: Vec<(f64, usize)> = samples.iter().map(|&i| (x[i].get(feature).as_f64(), y[i])).collect();
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = vals.len() as f64;
    let mut total = vec![0.0; n_classes];
    for &(_, c) in &vals {
        total[c] += 1.0;
    }
    let mut left = vec![0.0; n_classes];
    let mut best: Option<Split> = None;
    for j in 0..vals.len() - 1 {
        left[vals[j].1] += 1.0;
        if vals[j].0 == vals[j + 1].0 {
            continue;
        }
        let nl = (j + 1) as f64;
        let right: Vec<f64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let child = (nl * gini(&left, nl) + (n - nl) * gini(&right, n - nl)) / n;
        let gain = parent - child;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(Split {
                feature,
                threshold: (vals[j].0 + vals[j + 1].0) / 2.0,
                gain,
            });
        }
    }
    best
}

fn grow<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    dim: usize,
    cfg: &ForestConfig,
    seed: u64,
) -> Tree<T> {
    let mut rng = util::rng(seed);
    let n = x.len();
    let boot: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let max_features = cfg
        .max_features
        .unwrap_or_else(|| ((dim as f64).sqrt().round() as usize).max(1));
    let mut nodes: Vec<Node<T>> = vec![Node::Leaf { dist: vec![] }];
    let mut stack = vec![(0usize, boot, 0usize)];
    while let Some((at, samples, depth)) = stack.pop() {
        let mut counts = vec![0.0; n_classes];
        for &i in &samples {
            counts[y[i]] += 1.0;
        }
        let total = samples.len() as f64;
        let impurity = gini(&counts, total);
        let leaf = || Node::Leaf {
            dist: counts.iter().map(|c| T::of(c / total)).collect(),
        };
        if impurity == 0.0
            || samples.len() < cfg.min_samples_split
            || cfg.max_depth.is_some_and(|d| depth >= d)
        {
            nodes[at] = leaf();
            continue;
        }
        // features that vary inside the node; constant ones cannot split
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        for &i in &samples {
            seen.extend(x[i].indices().iter().copied());
        }
        let varying: Vec<usize> = seen
            .into_iter()
            .filter(|&f| {
                let v0 = x[samples[0]].get(f);
                samples.iter().any(|&i| x[i].get(f) != v0)
            })
            .collect();
        let picked: Vec<usize> = if varying.len() <= max_features {
            varying
        } else {
            let mut p: Vec<usize> = sample(&mut rng, varying.len(), max_features)
                .into_iter()
                .map(|j| varying[j])
                .collect();
            p.sort_unstable();
            p
        };
        let best = picked
            .iter()
            .filter_map(|&f| best_threshold(x, y, &samples, f, n_classes, impurity))
            .fold(None::<Split>, |b, s| match b {
                Some(b) if b.gain >= s.gain => Some(b),
                _ => Some(s),
            });
        let Some(split) = best.filter(|s| s.gain > 0.0) else {
            nodes[at] = leaf();
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| x[i].get(split.feature).as_f64() <= split.threshold);
        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { dist: vec![] });
        nodes.push(Node::Leaf { dist: vec![] });
        nodes[at] = Node::Split {
            feature: split.feature,
            threshold: T::of(split.threshold),
            left: li,
            right: ri,
        };
        stack.push((ri, r, depth + 1));
        stack.push((li, l, depth + 1));
    }
    Tree { nodes }
}

pub(super) fn train<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    dim: usize,
    cfg: &ForestConfig,
    seed: u64,
) -> Params<T> {
    let trees = (0..cfg.n_trees as u64)
        .into_par_iter()
        .map(|t| grow(x, y, n_classes, dim, cfg, util::derive_seed(seed, t)))
        .collect();
    Params::Forest { trees }
}

/// Mean of the leaf class distributions.
pub(super) fn scores<T: Scalar>(trees: &[Tree<T>], n_classes: usize, x: &SparseVector<T>) -> Vec<T> {
    let mut acc = vec![0.0; n_classes];
    for t in trees {
        for (a, &p) in acc.iter_mut().zip(t.leaf_dist(x)) {
            *a += p.as_f64();
        }
    }
    let n = trees.len().max(1) as f64;
    acc.into_iter().map(|a| T::of(a / n)).collect()
}
