use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Corpus;
use crate::artifact::{is_meta_line, ArtifactMeta};
use crate::error::{Error, Result};
use crate::util;

/// Allowed gap between achieved and target post fractions.
pub const SPLIT_TOLERANCE: f64 = 0.03;

const MAX_REFINE_ROUNDS: usize = 2_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Aggregation,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Aggregation => "aggregation",
            Partition::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Partition::Train),
            "aggregation" => Some(Partition::Aggregation),
            "test" => Some(Partition::Test),
            _ => None,
        }
    }
}

/// Whole-user assignment to partitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitAssignment {
    pub seed: u64,
    assignment: BTreeMap<String, Partition>,
}

impl SplitAssignment {
    pub fn from_map(seed: u64, assignment: BTreeMap<String, Partition>) -> Self {
        Self { seed, assignment }
    }

    pub fn partition_of(&self, user_id: &str) -> Option<Partition> {
        self.assignment.get(user_id).copied()
    }

    pub fn users_in(&self, p: Partition) -> BTreeSet<String> {
        self.assignment
            .iter()
            .filter(|(_, q)| **q == p)
            .map(|(u, _)| u.clone())
            .collect()
    }

    pub fn partitions(&self) -> BTreeSet<Partition> {
        self.assignment.values().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Partition)> {
        self.assignment.iter().map(|(u, p)| (u.as_str(), *p))
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// User-level view of a three-way split: aggregation users join training,
    /// test users stay put, so both regimes are scored on the same test users.
    pub fn collapse_aggregation(&self) -> SplitAssignment {
        let assignment = self
            .assignment
            .iter()
            .map(|(u, p)| {
                let q = if *p == Partition::Aggregation {
                    Partition::Train
                } else {
                    *p
                };
                (u.clone(), q)
            })
            .collect();
        SplitAssignment {
            seed: self.seed,
            assignment,
        }
    }
}

/// Achieved vs targeted post fractions of a split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub targets: Vec<(Partition, f64)>,
    pub achieved: Vec<(Partition, f64)>,
    pub max_deviation: f64,
    pub within_tolerance: bool,
    pub warnings: Vec<String>,
}

/// Assign whole users to partitions so that each partition's share of POSTS
/// approaches its target fraction.
///
/// Users are shuffled by `seed` and then placed greedily into the partition
/// with the largest remaining post deficit; a bounded single-move refinement
/// pass then reduces the worst deviation further.
pub fn split_user_disjoint(
    corpus: &Corpus,
    fractions: &[(Partition, f64)],
    seed: u64,
) -> Result<(SplitAssignment, SplitReport)> {
    validate_fractions(fractions)?;
    if corpus.n_users() == 0 {
        return Err(Error::InsufficientData("cannot split an empty corpus".into()));
    }
    let mut warnings = Vec::new();
    let counts: BTreeMap<&str, usize> = corpus
        .users()
        .map(|u| (u.user_id.as_str(), u.post_count))
        .collect();
    let total: usize = counts.values().sum();

    let mut users: Vec<&str> = counts.keys().copied().collect();
    users.shuffle(&mut util::rng(seed));

    let n_parts = fractions.len();
    let targets: Vec<f64> = fractions.iter().map(|(_, f)| f * total as f64).collect();
    let mut assigned = vec![0.0f64; n_parts];
    let mut slot: Vec<usize> = Vec::with_capacity(users.len());

    if users.len() == 1 {
        let train = fractions
            .iter()
            .position(|(p, _)| *p == Partition::Train)
            .unwrap_or(0);
        warnings.push(format!(
            "single user {:?}: assigned to {}",
            users[0],
            fractions[train].0.as_str()
        ));
        slot.push(train);
        assigned[train] += counts[users[0]] as f64;
    } else {
        for u in &users {
            let best = (0..n_parts)
                .max_by(|&a, &b| {
                    let da = targets[a] - assigned[a];
                    let db = targets[b] - assigned[b];
                    // ties go to the earlier partition
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            slot.push(best);
            assigned[best] += counts[u] as f64;
        }
        refine(&users, &counts, &targets, &mut assigned, &mut slot);
    }

    let denom = total.max(1) as f64;
    let achieved: Vec<(Partition, f64)> = fractions
        .iter()
        .zip(&assigned)
        .map(|((p, _), a)| (*p, a / denom))
        .collect();
    let max_deviation = fractions
        .iter()
        .zip(&achieved)
        .map(|((_, t), (_, a))| (t - a).abs())
        .fold(0.0, f64::max);
    let within_tolerance = max_deviation <= SPLIT_TOLERANCE + 1e-12;
    if !within_tolerance && total > 0 {
        let (dominant, n) = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(u, n)| (*u, *n))
            .unwrap();
        let msg = format!(
            "target fractions not reachable within {:.0} points: user {dominant:?} holds {:.1}% of posts; \
             best achievable deviation is {:.2} points",
            SPLIT_TOLERANCE * 100.0,
            100.0 * n as f64 / denom,
            100.0 * max_deviation
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let assignment = users
        .iter()
        .zip(&slot)
        .map(|(u, &s)| (u.to_string(), fractions[s].0))
        .collect();
    Ok((
        SplitAssignment { seed, assignment },
        SplitReport {
            targets: fractions.to_vec(),
            achieved,
            max_deviation,
            within_tolerance,
            warnings,
        },
    ))
}

fn validate_fractions(fractions: &[(Partition, f64)]) -> Result<()> {
    if fractions.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two partitions".into(),
        ));
    }
    let tags: BTreeSet<Partition> = fractions.iter().map(|(p, _)| *p).collect();
    if tags.len() != fractions.len() {
        return Err(Error::InvalidArgument("duplicate partition tag".into()));
    }
    if fractions.iter().any(|(_, f)| !(0.0..=1.0).contains(f)) {
        return Err(Error::InvalidArgument("fractions must lie in [0, 1]".into()));
    }
    let sum: f64 = fractions.iter().map(|(_, f)| f).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "fractions sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// (max |deviation|, sum of squared deviations), compared lexicographically.
fn objective(assigned: &[f64], targets: &[f64]) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut sq = 0.0;
    for (a, t) in assigned.iter().zip(targets) {
        let d = a - t;
        worst = worst.max(d.abs());
        sq += d * d;
    }
    (worst, sq)
}

fn refine(
    users: &[&str],
    counts: &BTreeMap<&str, usize>,
    targets: &[f64],
    assigned: &mut [f64],
    slot: &mut [usize],
) {
    let n_parts = targets.len();
    for _ in 0..MAX_REFINE_ROUNDS {
        let current = objective(assigned, targets);
        let mut best: Option<(usize, usize, (f64, f64))> = None;
        for (i, u) in users.iter().enumerate() {
            let n = counts[u] as f64;
            if n == 0.0 {
                continue;
            }
            let from = slot[i];
            for to in 0..n_parts {
                if to == from {
                    continue;
                }
                assigned[from] -= n;
                assigned[to] += n;
                let cand = objective(assigned, targets);
                assigned[from] += n;
                assigned[to] -= n;
                let better_than_best = match best {
                    None => true,
                    Some((_, _, b)) => lex_lt(cand, b),
                };
                if lex_lt(cand, current) && better_than_best {
                    best = Some((i, to, cand));
                }
            }
        }
        match best {
            Some((i, to, _)) => {
                let n = counts[users[i]] as f64;
                assigned[slot[i]] -= n;
                assigned[to] += n;
                slot[i] = to;
            }
            None => break,
        }
    }
}

fn lex_lt(a: (f64, f64), b: (f64, f64)) -> bool {
    const EPS: f64 = 1e-9;
    a.0 < b.0 - EPS || ((a.0 - b.0).abs() <= EPS && a.1 < b.1 - EPS)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: BTreeSet<String>,
    pub validation: BTreeSet<String>,
}

/// User-grouped k-fold over the users of a corpus.
pub fn kfold_user_groups(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Fold>> {
    kfold_ids(&corpus.user_ids(), k, seed)
}

/// k folds over a set of ids: shuffle by seed, then deal round-robin, so
/// validation sizes differ by at most one.
pub fn kfold_ids(ids: &[String], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    sorted.dedup();
    if sorted.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} users for {k} folds",
            sorted.len()
        )));
    }
    sorted.shuffle(&mut util::rng(seed));
    let mut validation: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];
    for (i, id) in sorted.iter().enumerate() {
        validation[i % k].insert((*id).clone());
    }
    let all: BTreeSet<String> = sorted.into_iter().cloned().collect();
    Ok(validation
        .into_iter()
        .map(|v| Fold {
            train: all.difference(&v).cloned().collect(),
            validation: v,
        })
        .collect())
}

/// One line of the split file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub user_id: String,
    pub partition: Partition,
    pub seed: u64,
}

pub fn save_split(split: &SplitAssignment, path: &Path, meta: Option<&ArtifactMeta>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    if let Some(m) = meta {
        m.write_line(&mut w).map_err(io)?;
    }
    for (u, p) in split.iter() {
        let rec = SplitRecord {
            user_id: u.to_string(),
            partition: p,
            seed: split.seed,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_split(path: &Path) -> Result<SplitAssignment> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_split(BufReader::new(f))
}

pub fn read_split<R: BufRead>(reader: R) -> Result<SplitAssignment> {
    let mut assignment = BTreeMap::new();
    let mut seed = None;
    for (i, line) in reader.lines().enumerate() {
        let malformed = |message: String| Error::MalformedRecord {
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if is_meta_line(&v) {
            continue;
        }
        let rec: SplitRecord = serde_json::from_value(v).map_err(|e| malformed(e.to_string()))?;
        if *seed.get_or_insert(rec.seed) != rec.seed {
            return Err(malformed("mixed seeds in one split file".into()));
        }
        if assignment.insert(rec.user_id.clone(), rec.partition).is_some() {
            return Err(malformed(format!("user {:?} assigned twice", rec.user_id)));
        }
    }
    Ok(SplitAssignment {
        seed: seed.unwrap_or(0),
        assignment,
    })
}
