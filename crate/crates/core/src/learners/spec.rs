use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    MultinomialNb,
    ComplementNb,
    LinearSvmSgd,
    PassiveAggressive,
    Ridge,
    Knn,
    RandomForest,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::MultinomialNb,
        Algorithm::ComplementNb,
        Algorithm::LinearSvmSgd,
        Algorithm::PassiveAggressive,
        Algorithm::Ridge,
        Algorithm::Knn,
        Algorithm::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::MultinomialNb => "mnb",
            Algorithm::ComplementNb => "cnb",
            Algorithm::LinearSvmSgd => "sgd",
            Algorithm::PassiveAggressive => "pa",
            Algorithm::Ridge => "ridge",
            Algorithm::Knn => "knn",
            Algorithm::RandomForest => "rf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "mnb" | "multinomial_nb" | "multinomialnb" => Algorithm::MultinomialNb,
            "cnb" | "complement_nb" | "complementnb" => Algorithm::ComplementNb,
            "sgd" | "svm" | "linear_svm_sgd" => Algorithm::LinearSvmSgd,
            "pa" | "pac" | "passive_aggressive" => Algorithm::PassiveAggressive,
            "ridge" | "rc" => Algorithm::Ridge,
            "knn" | "k-nn" => Algorithm::Knn,
            "rf" | "random_forest" => Algorithm::RandomForest,
            _ => return None,
        })
    }
}

/// Fixed neighbour count, or selection from a grid by internal CV.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KChoice {
    Fixed(usize),
    Auto(Vec<usize>),
}

pub const DEFAULT_K_GRID: [usize; 4] = [1, 3, 5, 9];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    NaiveBayes {
        alpha: f64,
    },
    Sgd {
        lambda: f64,
        epochs: usize,
    },
    PassiveAggressive {
        c: f64,
        epochs: usize,
    },
    Ridge {
        lambda: f64,
        tol: f64,
        max_iter: usize,
    },
    Knn {
        k: KChoice,
    },
    RandomForest {
        n_trees: usize,
        max_depth: Option<usize>,
        min_samples_split: usize,
        /// Features tried per split; `None` means the square root of the
        /// dimension.
        max_features: Option<usize>,
    },
}

impl Hyperparameters {
    pub fn defaults(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::MultinomialNb | Algorithm::ComplementNb => Self::NaiveBayes { alpha: 1.0 },
            Algorithm::LinearSvmSgd => Self::Sgd {
                lambda: 1e-4,
                epochs: 10,
            },
            Algorithm::PassiveAggressive => Self::PassiveAggressive { c: 1.0, epochs: 10 },
            Algorithm::Ridge => Self::Ridge {
                lambda: 1.0,
                tol: 1e-6,
                max_iter: 1000,
            },
            Algorithm::Knn => Self::Knn { k: KChoice::Fixed(3) },
            Algorithm::RandomForest => Self::RandomForest {
                n_trees: 10,
                max_depth: None,
                min_samples_split: 2,
                max_features: None,
            },
        }
    }

    fn keys(&self) -> &'static [&'static str] {
        match self {
            Self::NaiveBayes { .. } => &["alpha"],
            Self::Sgd { .. } => &["lambda", "epochs"],
            Self::PassiveAggressive { .. } => &["c", "epochs"],
            Self::Ridge { .. } => &["lambda", "tol", "max_iter"],
            Self::Knn { .. } => &["k", "k_grid"],
            Self::RandomForest { .. } => &["n_trees", "max_depth", "min_samples_split", "max_features"],
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidArgument(format!("invalid value {value:?} for hyperparameter {key}"));
        let pos_f = || -> Result<f64> {
            value.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0).ok_or_else(bad)
        };
        let pos_u = || -> Result<usize> { value.parse::<usize>().ok().filter(|v| *v > 0).ok_or_else(bad) };
        let opt_u = || -> Result<Option<usize>> {
            if value.eq_ignore_ascii_case("none") || value.eq_ignore_ascii_case("auto") {
                Ok(None)
            } else {
                pos_u().map(Some)
            }
        };
        match (self, key) {
            (Self::NaiveBayes { alpha }, "alpha") => *alpha = pos_f()?,
            (Self::Sgd { lambda, .. }, "lambda") => *lambda = pos_f()?,
            (Self::Sgd { epochs, .. }, "epochs") => *epochs = pos_u()?,
            (Self::PassiveAggressive { c, .. }, "c") => *c = pos_f()?,
            (Self::PassiveAggressive { epochs, .. }, "epochs") => *epochs = pos_u()?,
            (Self::Ridge { lambda, .. }, "lambda") => *lambda = pos_f()?,
            (Self::Ridge { tol, .. }, "tol") => *tol = pos_f()?,
            (Self::Ridge { max_iter, .. }, "max_iter") => *max_iter = pos_u()?,
            (Self::Knn { k }, "k") => {
                *k = if value.eq_ignore_ascii_case("auto") {
                    match k {
                        KChoice::Auto(g) => KChoice::Auto(g.clone()),
                        KChoice::Fixed(_) => KChoice::Auto(DEFAULT_K_GRID.to_vec()),
                    }
                } else {
                    KChoice::Fixed(pos_u()?)
                }
            }
            (Self::Knn { k }, "k_grid") => {
                let grid: Vec<usize> = value
                    .split([',', ' '])
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<usize>().ok().filter(|v| *v > 0))
                    .collect::<Option<_>>()
                    .filter(|g: &Vec<usize>| !g.is_empty())
                    .ok_or_else(bad)?;
                *k = KChoice::Auto(grid);
            }
            (Self::RandomForest { n_trees, .. }, "n_trees") => *n_trees = pos_u()?,
            (Self::RandomForest { max_depth, .. }, "max_depth") => *max_depth = opt_u()?,
            (Self::RandomForest { min_samples_split, .. }, "min_samples_split") => {
                *min_samples_split = pos_u()?.max(2)
            }
            (Self::RandomForest { max_features, .. }, "max_features") => *max_features = opt_u()?,
            (h, _) => {
                return Err(Error::InvalidArgument(format!(
                    "unknown hyperparameter {key:?}; accepted: {}",
                    h.keys().join(", ")
                )))
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub hyper: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            hyper: Hyperparameters::defaults(algorithm),
            seed,
        }
    }

    /// Defaults overridden by string key/value pairs; unknown keys and
    /// out-of-range values are rejected.
    pub fn with_params(algorithm: Algorithm, params: &BTreeMap<String, String>, seed: u64) -> Result<Self> {
        let mut spec = Self::new(algorithm, seed);
        // a grid given without k means "select from this grid"
        let mut keys: Vec<(&String, &String)> = params.iter().collect();
        keys.sort_by_key(|(k, _)| (k.as_str() == "k_grid") as u8);
        for (k, v) in keys {
            spec.hyper.set(k, v)?;
        }
        if let (Some(k), Some(_)) = (params.get("k"), params.get("k_grid")) {
            if !k.eq_ignore_ascii_case("auto") {
                return Err(Error::InvalidArgument("give either k or k_grid, not both".into()));
            }
        }
        Ok(spec)
    }

    pub fn label(&self) -> String {
        self.algorithm.as_str().to_string()
    }
}
