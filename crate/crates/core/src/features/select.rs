//! Supervised and unsupervised feature scores over binary occurrences.
//!
//! Each document is given as the list of column indices present in it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Df,
    Chi2,
    Mi,
}

impl SelectionMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "df" => Some(Self::Df),
            "chi2" | "chi_square" | "chisquare" => Some(Self::Chi2),
            "mi" | "mutual_information" => Some(Self::Mi),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Df => "df",
            Self::Chi2 => "chi2",
            Self::Mi => "mi",
        }
    }
}

/// How per-class χ² values become one feature score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chi2Pooling {
    #[default]
    Max,
    Sum,
}

pub const MI_EPSILON: f64 = 1e-10;

/// Per-feature document counts overall and per class.
struct Contingency {
    n_docs: usize,
    class_docs: Vec<usize>,
    /// `present[f][c]`: documents of class `c` containing feature `f`
    present: Vec<Vec<usize>>,
}

fn contingency(rows: &[Vec<usize>], labels: &[usize], n_features: usize, n_classes: usize) -> Result<Contingency> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            actual: labels.len(),
        });
    }
    if n_classes < 2 {
        return Err(Error::InvalidArgument("feature scoring needs at least two classes".into()));
    }
    let mut class_docs = vec![0; n_classes];
    let mut present = vec![vec![0usize; n_classes]; n_features];
    for (row, &y) in rows.iter().zip(labels) {
        if y >= n_classes {
            return Err(Error::InvalidArgument(format!("label {y} out of range")));
        }
        class_docs[y] += 1;
        let mut last = None;
        for &f in row {
            if f >= n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    actual: f + 1,
                });
            }
            // tolerate repeated indices: occurrences are binary
            if last != Some(f) {
                present[f][y] += 1;
            }
            last = Some(f);
        }
    }
    Ok(Contingency {
        n_docs: rows.len(),
        class_docs,
        present,
    })
}

/// Number of documents each feature occurs in.
pub fn df_scores(rows: &[Vec<usize>], n_features: usize) -> Result<Vec<f64>> {
    let mut df = vec![0.0; n_features];
    for row in rows {
        let mut last = None;
        for &f in row {
            if f >= n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    actual: f + 1,
                });
            }
            if last != Some(f) {
                df[f] += 1.0;
            }
            last = Some(f);
        }
    }
    Ok(df)
}

pub fn chi2_scores(
    rows: &[Vec<usize>],
    labels: &[usize],
    n_features: usize,
    n_classes: usize,
    pooling: Chi2Pooling,
) -> Result<Vec<f64>> {
    let t = contingency(rows, labels, n_features, n_classes)?;
    let n = t.n_docs as f64;
    Ok(t.present
        .iter()
        .map(|counts| {
            let df: usize = counts.iter().sum();
            let per_class = counts.iter().zip(&t.class_docs).map(|(&a, &nc)| {
                let a = a as f64;
                let b = df as f64 - a;
                let c = nc as f64 - a;
                let d = n - nc as f64 - b;
                let denom = (a + c) * (b + d) * (a + b) * (c + d);
                if denom == 0.0 {
                    0.0
                } else {
                    n * (a * d - c * b).powi(2) / denom
                }
            });
            match pooling {
                Chi2Pooling::Max => per_class.fold(0.0, f64::max),
                Chi2Pooling::Sum => per_class.sum(),
            }
        })
        .collect())
}

/// Expected mutual information (nats) between feature presence and class,
/// from the smoothed 2×C joint table.
pub fn mutual_information_scores(
    rows: &[Vec<usize>],
    labels: &[usize],
    n_features: usize,
    n_classes: usize,
) -> Result<Vec<f64>> {
    let t = contingency(rows, labels, n_features, n_classes)?;
    let n = t.n_docs as f64;
    let total = n + 2.0 * n_classes as f64 * MI_EPSILON;
    Ok(t.present
        .iter()
        .map(|counts| {
            let mut joint = [vec![0.0; n_classes], vec![0.0; n_classes]];
            for c in 0..n_classes {
                joint[1][c] = (counts[c] as f64 + MI_EPSILON) / total;
                joint[0][c] = ((t.class_docs[c] - counts[c]) as f64 + MI_EPSILON) / total;
            }
            let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
            let mut mi = 0.0;
            for x in 0..2 {
                for c in 0..n_classes {
                    let pc = joint[0][c] + joint[1][c];
                    let p = joint[x][c];
                    mi += p * (p / (px[x] * pc)).ln();
                }
            }
            mi.max(0.0)
        })
        .collect())
}

/// Indices of the `k` highest scores, ascending. Ties go to lower indices;
/// NaN scores rank last.
pub fn select_top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (scores[a], scores[b]);
        match (x.is_nan(), y.is_nan()) {
            (true, true) => a.cmp(&b),
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => y.partial_cmp(&x).unwrap().then(a.cmp(&b)),
        }
    });
    order.truncate(k.min(scores.len()));
    order.sort_unstable();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn top_k_examples() {
        assert_eq!(select_top_k(&[3.0, 1.0, 2.0], 2), vec![0, 2]);
        assert_eq!(select_top_k(&[3.0, 1.0, 2.0], 10), vec![0, 1, 2]);
        assert_eq!(select_top_k(&[1.0, 1.0, 1.0, 2.0], 2), vec![0, 3]);
    }

    #[test]
    fn chi2_ubiquitous_feature_scores_zero() {
        let rows = vec![vec![0], vec![0], vec![0, 1], vec![0]];
        let s = chi2_scores(&rows, &[0, 0, 1, 1], 2, 2, Chi2Pooling::Max).unwrap();
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn chi2_perfectly_aligned_is_n() {
        let rows = vec![vec![0], vec![0], vec![], vec![]];
        let s = chi2_scores(&rows, &[0, 0, 1, 1], 1, 2, Chi2Pooling::Max).unwrap();
        assert!((s[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mi_perfect_feature_is_ln2() {
        let rows = vec![vec![0], vec![0], vec![], vec![]];
        let s = mutual_information_scores(&rows, &[0, 0, 1, 1], 1, 2).unwrap();
        assert!((s[0] - std::f64::consts::LN_2).abs() < 1e-8);
    }

    #[test]
    fn mi_independent_feature_is_near_zero() {
        let rows = vec![vec![0], vec![], vec![0], vec![]];
        let s = mutual_information_scores(&rows, &[0, 0, 1, 1], 1, 2).unwrap();
        assert!(s[0] <= 1e-9);
    }

    #[test]
    fn label_row_mismatch_is_error() {
        assert!(chi2_scores(&[vec![0]], &[0, 1], 1, 2, Chi2Pooling::Max).is_err());
    }

    fn random_corpus(seed: u64, n_docs: usize, v: usize, c: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
        let mut r = crate::util::rng(seed);
        let rows = (0..n_docs)
            .map(|_| (0..v).filter(|_| r.gen_bool(0.4)).collect())
            .collect();
        let labels = (0..n_docs).map(|_| r.gen_range(0..c)).collect();
        (rows, labels)
    }

    /// Explicit 2x2 table per (feature, class) built by scanning documents.
    fn chi2_oracle(rows: &[Vec<usize>], labels: &[usize], v: usize, c: usize) -> Vec<f64> {
        (0..v)
            .map(|f| {
                (0..c)
                    .map(|k| {
                        let mut t = [[0.0f64; 2]; 2];
                        for (row, &y) in rows.iter().zip(labels) {
                            t[row.contains(&f) as usize][(y == k) as usize] += 1.0;
                        }
                        let (a, b, cc, d) = (t[1][1], t[1][0], t[0][1], t[0][0]);
                        let n = a + b + cc + d;
                        let den = (a + cc) * (b + d) * (a + b) * (cc + d);
                        if den == 0.0 {
                            0.0
                        } else {
                            n * (a * d - cc * b).powi(2) / den
                        }
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    fn mi_oracle(rows: &[Vec<usize>], labels: &[usize], v: usize, c: usize) -> Vec<f64> {
        let eps = 1e-10;
        (0..v)
            .map(|f| {
                let mut counts = vec![[0.0f64; 2]; c];
                for (row, &y) in rows.iter().zip(labels) {
                    counts[y][row.contains(&f) as usize] += 1.0;
                }
                let total: f64 = counts.iter().map(|r| r[0] + r[1] + 2.0 * eps).sum();
                let p = |k: usize, x: usize| (counts[k][x] + eps) / total;
                let px = |x: usize| (0..c).map(|k| p(k, x)).sum::<f64>();
                let pc = |k: usize| p(k, 0) + p(k, 1);
                let mut mi = 0.0;
                for k in 0..c {
                    for x in 0..2 {
                        mi += p(k, x) * (p(k, x) / (px(x) * pc(k))).ln();
                    }
                }
                mi.max(0.0)
            })
            .collect()
    }

    #[test]
    fn chi2_and_mi_match_oracles_on_random_corpora() {
        for seed in 0..5 {
            let (rows, labels) = random_corpus(seed, 20, 8, 3);
            let chi = chi2_scores(&rows, &labels, 8, 3, Chi2Pooling::Max).unwrap();
            let mi = mutual_information_scores(&rows, &labels, 8, 3).unwrap();
            for (a, b) in chi.iter().zip(chi2_oracle(&rows, &labels, 8, 3)) {
                assert!((a - b).abs() < 1e-9);
            }
            for (a, b) in mi.iter().zip(mi_oracle(&rows, &labels, 8, 3)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scores_invariant_under_class_relabeling(seed in 0u64..1000) {
                let (rows, labels) = random_corpus(seed, 20, 6, 3);
                let perm = [2usize, 0, 1];
                let relabeled: Vec<usize> = labels.iter().map(|&y| perm[y]).collect();
                let a = chi2_scores(&rows, &labels, 6, 3, Chi2Pooling::Max).unwrap();
                let b = chi2_scores(&rows, &relabeled, 6, 3, Chi2Pooling::Max).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
                let a = mutual_information_scores(&rows, &labels, 6, 3).unwrap();
                let b = mutual_information_scores(&rows, &relabeled, 6, 3).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }

            #[test]
            fn top_k_matches_stable_sort(scores in proptest::collection::vec(0u8..4, 0..30), k in 1usize..40) {
                let s: Vec<f64> = scores.iter().map(|&x| x as f64).collect();
                let mut idx: Vec<usize> = (0..s.len()).collect();
                idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
                let mut want: Vec<usize> = idx.into_iter().take(k).collect();
                want.sort_unstable();
                prop_assert_eq!(select_top_k(&s, k), want);
            }
        }
    }
}
