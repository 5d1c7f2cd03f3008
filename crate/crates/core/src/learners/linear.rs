//! One-vs-rest linear models: hinge-loss SGD, passive-aggressive (PA-I) and
//! ridge regression on ±1 targets.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::Params;
use crate::features::SparseVector;
use crate::scalar::Scalar;
use crate::util;

fn sign(label: usize, class: usize) -> f64 {
    if label == class {
        1.0
    } else {
        -1.0
    }
}

fn dot<T: Scalar>(x: &SparseVector<T>, w: &[f64]) -> f64 {
    x.iter().map(|(i, v)| v.as_f64() * w[i]).sum()
}

fn finish<T: Scalar>(ws: Vec<(Vec<f64>, f64)>) -> Params<T> {
    let (weights, bias): (Vec<Vec<T>>, Vec<T>) = ws
        .into_iter()
        .map(|(w, b)| (w.into_iter().map(T::of).collect(), T::of(b)))
        .unzip();
    Params::Linear { weights, bias }
}

fn epoch_orders(n: usize, epochs: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = util::rng(util::derive_seed(seed, 0x5eed));
    (0..epochs)
        .map(|_| {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect()
}

/// Step-size offset so the first step equals the typical weight scale
/// `lambda^(-1/4)`.
pub(super) fn sgd_t0(lambda: f64) -> f64 {
    let typw = (1.0 / lambda.sqrt()).sqrt();
    1.0 / (typw * lambda)
}

pub(super) fn train_sgd<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    dim: usize,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Params<T> {
    let orders = epoch_orders(x.len(), epochs, seed);
    let t0 = sgd_t0(lambda);
    let ws = (0..n_classes)
        .into_par_iter()
        .map(|c| {
            let mut v = vec![0.0; dim];
            let mut scale = 1.0f64;
            let mut b = 0.0f64;
            let mut t = 0.0f64;
            for order in &orders {
                for &i in order {
                    let eta = 1.0 / (lambda * (t0 + t));
                    let yi = sign(y[i], c);
                    let p = scale * dot(&x[i], &v) + b;
                    scale *= (1.0 - eta * lambda).max(1e-12);
                    if yi * p < 1.0 {
                        let step = eta * yi / scale;
                        for (f, a) in x[i].iter() {
                            v[f] += step * a.as_f64();
                        }
                        b += eta * yi;
                    }
                    t += 1.0;
                    if scale < 1e-9 {
                        v.iter_mut().for_each(|w| *w *= scale);
                        scale = 1.0;
                    }
                }
            }
            v.iter_mut().for_each(|w| *w *= scale);
            (v, b)
        })
        .collect();
    finish(ws)
}

pub(super) fn train_pa<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    dim: usize,
    c_agg: f64,
    epochs: usize,
    seed: u64,
) -> Params<T> {
    let orders = epoch_orders(x.len(), epochs, seed);
    let norms: Vec<f64> = x.iter().map(|v| v.squared_norm().as_f64() + 1.0).collect();
    let ws = (0..n_classes)
        .into_par_iter()
        .map(|c| {
            let mut w = vec![0.0; dim];
            let mut b = 0.0;
            for order in &orders {
                for &i in order {
                    let yi = sign(y[i], c);
                    let loss = (1.0 - yi * (dot(&x[i], &w) + b)).max(0.0);
                    if loss > 0.0 {
                        let tau = c_agg.min(loss / norms[i]);
                        for (f, a) in x[i].iter() {
                            w[f] += tau * yi * a.as_f64();
                        }
                        b += tau * yi;
                    }
                }
            }
            (w, b)
        })
        .collect();
    finish(ws)
}

/// Conjugate gradient on the normal equations of `[X 1]` with the penalty
/// on weights only.
pub(super) fn train_ridge<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[usize],
    n_classes: usize,
    dim: usize,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Params<T> {
    // theta = (w_0..w_{dim-1}, b)
    let apply = |theta: &[f64]| -> Vec<f64> {
        let (w, b) = theta.split_at(dim);
        let u: Vec<f64> = x.iter().map(|xi| dot(xi, w) + b[0]).collect();
        let mut out = vec![0.0; dim + 1];
        for (xi, &ui) in x.iter().zip(&u) {
            for (f, a) in xi.iter() {
                out[f] += a.as_f64() * ui;
            }
            out[dim] += ui;
        }
        for f in 0..dim {
            out[f] += lambda * theta[f];
        }
        out
    };
    let ws = (0..n_classes)
        .into_par_iter()
        .map(|c| {
            let mut rhs = vec![0.0; dim + 1];
            for (xi, &yi) in x.iter().zip(y) {
                let s = sign(yi, c);
                for (f, a) in xi.iter() {
                    rhs[f] += a.as_f64() * s;
                }
                rhs[dim] += s;
            }
            let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let mut theta = vec![0.0; dim + 1];
            let mut r = rhs.clone();
            let mut p = r.clone();
            let mut rr: f64 = r.iter().map(|v| v * v).sum();
            for _ in 0..max_iter {
                if rr.sqrt() / rhs_norm <= tol {
                    break;
                }
                let ap = apply(&p);
                let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
                if pap <= 0.0 {
                    break;
                }
                let alpha = rr / pap;
                for i in 0..=dim {
                    theta[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                let rr_new: f64 = r.iter().map(|v| v * v).sum();
                let beta = rr_new / rr;
                for i in 0..=dim {
                    p[i] = r[i] + beta * p[i];
                }
                rr = rr_new;
            }
            let b = theta.pop().unwrap();
            (theta, b)
        })
        .collect();
    finish(ws)
}
