//! Run configuration: `key = value` lines with optional `[section]`
//! headers that prefix the keys below them. Flags override the file, and
//! every resolved key enters the config hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use styloprof::aggregate::{MessageBasedConfig, ProfileFeatures};
use styloprof::corpus::{AgeGroup, Partition, Task};
use styloprof::evaluate::AgeMapping;
use styloprof::features::{Chi2Pooling, Extractor, FeatureKind, Representation, SelectionMethod, SpaceConfig};
use styloprof::learners::{Algorithm, ModelSpec};
use styloprof::pipeline::TextModelConfig;
use styloprof::textprep::FunctionWordList;
use styloprof::userlevel::UserBasedConfig;
use styloprof::util;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {message}")]
    Invalid { key: String, value: String, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
}

type Result<T> = std::result::Result<T, ConfigError>;

const DEFAULTS: &[(&str, &str)] = &[
    ("task", "age"),
    ("seed", "0"),
    ("features", "char_ngram"),
    ("features.char_n", "2,3,4"),
    ("features.function_words", "builtin"),
    ("select", "chi2:10000"),
    ("select.pooling", "max"),
    ("repr", "binary"),
    ("balance", "false"),
    ("model.algo", "mnb"),
    ("ensemble.algo", "rf"),
    ("aggregate.profile_features", "full"),
    ("aggregate.retrain", "true"),
    ("aggregate.cv_folds", "5"),
    ("userbased.folds", "10"),
    ("userbased.boundary", "true"),
    ("split.fractions", "0.5,0.3,0.2"),
    ("split.min_posts", "15"),
    ("eval.age_mapping", "ranges"),
];

/// Keys under these prefixes are checked by the consumer (hyperparameters,
/// age label mapping).
const OPEN_PREFIXES: &[&str] = &["model.", "ensemble.", "eval.age_map."];

fn known(key: &str) -> bool {
    DEFAULTS.iter().any(|(k, _)| *k == key) || OPEN_PREFIXES.iter().any(|p| key.starts_with(p))
}

/// Raw resolved entries. Defaults, then the file, then overrides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            entries: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl RawConfig {
    pub fn parse_str(&mut self, src: &str) -> Result<()> {
        let mut section = String::new();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(s) = line.strip_prefix('[') {
                let name = s.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: i + 1,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            self.set(&key, v.trim())?;
        }
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<()> {
        let src = fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        self.parse_str(&src)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !known(key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        // switching algorithm drops hyperparameters meant for the old one
        if key == "model.algo" || key == "ensemble.algo" {
            let prefix = key.trim_end_matches("algo");
            if self.entries.get(key).map(String::as_str) != Some(value) {
                self.entries.retain(|k, _| !k.starts_with(prefix) || k == key);
            }
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// `KEY=VALUE` form used by `--set`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            message: format!("expected KEY=VALUE, got {pair:?}"),
        })?;
        self.set(k.trim(), v.trim())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn get(&self, key: &str) -> &str {
        self.entries.get(key).map(String::as_str).unwrap_or("")
    }

    /// Hash over every resolved entry.
    pub fn hash(&self) -> String {
        let canon: String = self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        util::sha256_hex(canon.as_bytes())[..16].to_string()
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        RunConfig::from_raw(self)
    }
}

fn invalid(key: &str, value: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
        message: message.into(),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(invalid(key, v, "expected true or false")),
    }
}

fn parse_num<N: std::str::FromStr>(key: &str, v: &str) -> Result<N> {
    v.parse().map_err(|_| invalid(key, v, "not a number"))
}

fn parse_list<N: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<N>> {
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

/// `chi2:10000`, `mi:500`, `df:2000` or `none`.
pub fn parse_select(v: &str) -> Result<(Option<SelectionMethod>, usize)> {
    if v == "none" {
        return Ok((None, 0));
    }
    let (m, k) = v.split_once(':').unwrap_or((v, "10000"));
    let method = SelectionMethod::parse(m).ok_or_else(|| invalid("select", v, "method must be df, chi2, mi or none"))?;
    let k: usize = parse_num("select", k)?;
    if k == 0 {
        return Err(invalid("select", v, "k must be positive"));
    }
    Ok((Some(method), k))
}

pub fn parse_fractions(v: &str) -> Result<Vec<(Partition, f64)>> {
    let fr: Vec<f64> = parse_list("split.fractions", v)?;
    let parts = match fr.len() {
        2 => vec![Partition::Train, Partition::Test],
        3 => vec![Partition::Train, Partition::Aggregation, Partition::Test],
        _ => return Err(invalid("split.fractions", v, "give two or three fractions")),
    };
    Ok(parts.into_iter().zip(fr).collect())
}

fn model_spec(raw: &RawConfig, prefix: &str, seed: u64) -> Result<ModelSpec> {
    let key = format!("{prefix}.algo");
    let name = raw.get(&key);
    let algo = Algorithm::parse(name).ok_or_else(|| invalid(&key, name, "unknown algorithm"))?;
    let params: BTreeMap<String, String> = raw
        .entries()
        .iter()
        .filter_map(|(k, v)| {
            k.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('.'))
                .filter(|r| *r != "algo")
                .map(|r| (r.to_string(), v.clone()))
        })
        .collect();
    ModelSpec::with_params(algo, &params, seed).map_err(|e| invalid(prefix, name, e.to_string()))
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub task: Task,
    pub seed: u64,
    pub post: TextModelConfig,
    pub ensemble: ModelSpec,
    pub profile_features: ProfileFeatures,
    pub retrain: bool,
    pub ensemble_cv_folds: usize,
    pub userbased_folds: usize,
    pub boundary: bool,
    pub fractions: Vec<(Partition, f64)>,
    pub min_posts: usize,
    pub age_mapping: AgeMapping,
}

impl RunConfig {
    fn from_raw(raw: &RawConfig) -> Result<Self> {
        let task = Task::parse(raw.get("task")).ok_or_else(|| invalid("task", raw.get("task"), "age or gender"))?;
        let seed: u64 = parse_num("seed", raw.get("seed"))?;
        let kinds = raw
            .get("features")
            .split(',')
            .map(|s| FeatureKind::parse(s).ok_or_else(|| invalid("features", s, "unknown feature kind")))
            .collect::<Result<Vec<_>>>()?;
        let char_n: Vec<usize> = parse_list("features.char_n", raw.get("features.char_n"))?;
        if char_n.iter().any(|&n| n == 0) {
            return Err(invalid("features.char_n", raw.get("features.char_n"), "n must be positive"));
        }
        let fw = match raw.get("features.function_words") {
            "builtin" => FunctionWordList::default(),
            p => FunctionWordList::from_path(Path::new(p)).map_err(|e| invalid("features.function_words", p, e.to_string()))?,
        };
        let (selection, k) = parse_select(raw.get("select"))?;
        let pooling = match raw.get("select.pooling") {
            "max" => Chi2Pooling::Max,
            "sum" => Chi2Pooling::Sum,
            v => return Err(invalid("select.pooling", v, "max or sum")),
        };
        let representation =
            Representation::parse(raw.get("repr")).ok_or_else(|| invalid("repr", raw.get("repr"), "unknown representation"))?;
        let space = SpaceConfig {
            kinds,
            selection,
            k,
            pooling,
            representation,
        };
        let post = TextModelConfig {
            space,
            extractor: Extractor {
                char_n,
                function_words: Arc::new(fw),
            },
            model: model_spec(raw, "model", seed)?,
            balance: parse_bool("balance", raw.get("balance"))?,
        };
        let ensemble = model_spec(raw, "ensemble", util::derive_seed(seed, 0xe5))?;
        let pf = raw.get("aggregate.profile_features");
        let profile_features =
            ProfileFeatures::parse(pf).ok_or_else(|| invalid("aggregate.profile_features", pf, "full or labels-only"))?;
        let mut age_mapping = match raw.get("eval.age_mapping") {
            "ranges" => AgeMapping::with_defaults(),
            "strict" => AgeMapping::default(),
            v => return Err(invalid("eval.age_mapping", v, "ranges or strict")),
        };
        for (k, v) in raw.entries() {
            if let Some(label) = k.strip_prefix("eval.age_map.") {
                let target = match v.as_str() {
                    "drop" => None,
                    g => Some(AgeGroup::parse(g).ok_or_else(|| invalid(k, v, "target must be an age group or drop"))?),
                };
                age_mapping.explicit.insert(label.to_string(), target);
            }
        }
        let min_posts: usize = parse_num("split.min_posts", raw.get("split.min_posts"))?;
        if min_posts == 0 {
            return Err(invalid("split.min_posts", "0", "must be at least 1"));
        }
        Ok(Self {
            task,
            seed,
            post,
            ensemble,
            profile_features,
            retrain: parse_bool("aggregate.retrain", raw.get("aggregate.retrain"))?,
            ensemble_cv_folds: parse_num("aggregate.cv_folds", raw.get("aggregate.cv_folds"))?,
            userbased_folds: parse_num("userbased.folds", raw.get("userbased.folds"))?,
            boundary: parse_bool("userbased.boundary", raw.get("userbased.boundary"))?,
            fractions: parse_fractions(raw.get("split.fractions"))?,
            min_posts,
            age_mapping,
        })
    }

    pub fn message_based(&self) -> MessageBasedConfig {
        MessageBasedConfig {
            post: self.post.clone(),
            ensemble: self.ensemble.clone(),
            profile_features: self.profile_features,
            retrain: self.retrain,
            ensemble_cv_folds: self.ensemble_cv_folds,
        }
    }

    pub fn user_based(&self) -> UserBasedConfig {
        UserBasedConfig {
            candidates: vec![self.post.clone()],
            folds: self.userbased_folds,
            cv_seed: self.seed,
            boundary: self.boundary,
        }
    }
}
