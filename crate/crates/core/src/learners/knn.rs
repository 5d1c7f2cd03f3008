use rand::seq::SliceRandom;

use super::spec::KChoice;
use super::Params;
use crate::error::Result;
use crate::features::SparseVector;
use crate::scalar::{argmax, Scalar};
use crate::util;

const ZERO_DISTANCE: f64 = 1e-12;
const SELECTION_FOLDS: usize = 3;

fn cosine_distance<T: Scalar>(a: &SparseVector<T>, a_norm: f64, b: &SparseVector<T>, b_norm: f64) -> f64 {
    if a_norm == 0.0 || b_norm == 0.0 {
        return 1.0;
    }
    (1.0 - a.dot(b).as_f64() / (a_norm * b_norm)).max(0.0)
}

/// Inverse-distance weighted class votes of the `k` nearest points. When
/// some neighbours coincide with the query, only they vote.
fn votes<T: Scalar>(
    k: usize,
    points: &[SparseVector<T>],
    norms: &[f64],
    labels: &[usize],
    n_classes: usize,
    x: &SparseVector<T>,
    skip: Option<&[bool]>,
) -> Vec<f64> {
    let xn = x.norm().as_f64();
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(j, _)| skip.is_none_or(|s| !s[*j]))
        .map(|(j, p)| (cosine_distance(x, xn, p, norms[j]), j))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d.truncate(k.max(1));
    let mut v = vec![0.0; n_classes];
    if d.iter().any(|(dist, _)| *dist <= ZERO_DISTANCE) {
        for (dist, j) in &d {
            if *dist <= ZERO_DISTANCE {
                v[labels[*j]] += 1.0;
            }
        }
    } else {
        for (dist, j) in &d {
            v[labels[*j]] += 1.0 / dist;
        }
    }
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|a| *a /= total);
    }
    v
}

pub(super) fn train<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    k: &KChoice,
    seed: u64,
) -> Result<Params<T>> {
    let k = match k {
        KChoice::Fixed(k) => *k,
        KChoice::Auto(grid) => select_k(x, y, n_classes, grid, seed),
    };
    Ok(Params::Knn {
        k,
        points: x.to_vec(),
        labels: y.to_vec(),
    })
}

/// Grid value with the best held-out accuracy; ties go to the smaller k.
fn select_k<T: Scalar>(x: &[SparseVector<T>], y: &[usize], n_classes: usize, grid: &[usize], seed: u64) -> usize {
    let mut grid: Vec<usize> = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut util::rng(util::derive_seed(seed, 0x4b)));
    let folds = SELECTION_FOLDS.min(x.len());
    let norms: Vec<f64> = x.iter().map(|v| v.norm().as_f64()).collect();
    let mut correct = vec![0usize; grid.len()];
    for f in 0..folds {
        let mut held = vec![false; x.len()];
        for &i in order.iter().skip(f).step_by(folds) {
            held[i] = true;
        }
        for i in (0..x.len()).filter(|&i| held[i]) {
            for (g, &k) in grid.iter().enumerate() {
                let v = votes(k, x, &norms, y, n_classes, &x[i], Some(&held));
                if argmax(&v) == y[i] {
                    correct[g] += 1;
                }
            }
        }
    }
    let best = (0..grid.len()).fold(0, |b, g| if correct[g] > correct[b] { g } else { b });
    log::info!("knn: selected k={} from grid {:?} (held-out hits {:?})", grid[best], grid, correct);
    grid[best]
}

pub(super) fn scores<T: Scalar>(
    k: usize,
    points: &[SparseVector<T>],
    labels: &[usize],
    n_classes: usize,
    x: &SparseVector<T>,
) -> Vec<T> {
    let norms: Vec<f64> = points.iter().map(|p| p.norm().as_f64()).collect();
    votes(k, points, &norms, labels, n_classes, x, None)
        .into_iter()
        .map(T::of)
        .collect()
}
