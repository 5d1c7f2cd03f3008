use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Cursor};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{compute_metrics, stratified_baseline_expectation, MetricsReport};
use crate::corpus::{read_corpus, AgeGroup, Corpus, CorpusRecord, Task};
use crate::error::{Error, Result};
use crate::learners::TrainedModel;
use crate::pipeline;
use crate::scalar::Scalar;
use crate::userlevel::merge_user_documents;

/// Translation of foreign age labels onto the four target groups.
///
/// Labels already naming a target group pass through. Others are looked up
/// in `explicit` (a `None` target drops the label), then, if
/// `range_defaults` is set, mapped by the lower bound of the bracket:
/// up to 19 dropped, 20-24, 25-34, 35-49 and 50 or more.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeMapping {
    pub explicit: BTreeMap<String, Option<AgeGroup>>,
    pub range_defaults: bool,
}

impl AgeMapping {
    pub fn with_defaults() -> Self {
        Self {
            explicit: BTreeMap::new(),
            range_defaults: true,
        }
    }

    fn lower_bound(raw: &str) -> Option<u32> {
        let s = raw.trim().trim_start_matches(['[', '(', '<', '=', '>', ' ']);
        let digits: String = s.chars().take_while(char::is_ascii_digit).collect();
        digits.parse().ok()
    }

    /// `Ok(None)` means the label is deliberately dropped.
    pub fn map(&self, raw: &str) -> Result<Option<AgeGroup>> {
        if let Some(g) = AgeGroup::parse(raw) {
            return Ok(Some(g));
        }
        if let Some(t) = self.explicit.get(raw) {
            return Ok(*t);
        }
        let unknown = || Error::UnknownLabel {
            line: 0,
            label: raw.to_string(),
        };
        if !self.range_defaults {
            return Err(unknown());
        }
        let lo = Self::lower_bound(raw).ok_or_else(unknown)?;
        Ok(match lo {
            0..=19 => None,
            20..=24 => Some(AgeGroup::ALL[0]),
            25..=34 => Some(AgeGroup::ALL[1]),
            35..=49 => Some(AgeGroup::ALL[2]),
            _ => Some(AgeGroup::ALL[3]),
        })
    }
}

/// Load a corpus whose age labels may use another bracket scheme. Without a
/// mapping, unknown labels are an error.
pub fn load_foreign_corpus(path: &Path, task: Task, mapping: Option<&AgeMapping>) -> Result<Corpus> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let Some(mapping) = mapping else {
        return read_corpus(BufReader::new(f), Some(task));
    };
    let mut buf = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        if v.get("_meta").is_some() {
            continue;
        }
        let mut rec: CorpusRecord = serde_json::from_value(v).map_err(|e| Error::MalformedRecord {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(raw) = rec.age_group.take() {
            rec.age_group = mapping
                .map(&raw)
                .map_err(|_| Error::UnknownLabel { line: i + 1, label: raw })?
                .map(|g| g.as_str().to_string());
        }
        serde_json::to_writer(&mut buf, &rec)?;
        buf.push(b'\n');
    }
    read_corpus(Cursor::new(buf), Some(task))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalUnit {
    /// Every labeled post is an instance carrying its author's label.
    Post,
    /// Each labeled user's merged document is one instance.
    User,
}

/// Apply a trained text model unchanged to another corpus. The baseline in
/// the report is the foreign corpus's own stratified expectation.
pub fn cross_domain_evaluate<T: Scalar>(
    model: &TrainedModel<T>,
    foreign: &Corpus,
    unit: EvalUnit,
) -> Result<MetricsReport> {
    let task = foreign
        .label_task()
        .ok_or_else(|| Error::InvalidArgument("foreign corpus has no label task".into()))?;
    if task.class_names() != model.classes {
        return Err(Error::InvalidArgument(format!(
            "label vocabulary mismatch: model has {:?}, corpus has {:?}",
            model.classes,
            task.class_names()
        )));
    }
    let space = model
        .space
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("model carries no feature space".into()))?;
    let prep = space.preprocessor();
    let (docs, labels) = match unit {
        EvalUnit::Post => {
            let labeled = foreign.labeled_only();
            let users = labeled.user_ids().into_iter().collect();
            let (posts, y) = pipeline::labeled_posts(&labeled, &users);
            (pipeline::process_posts(&prep, &posts), y)
        }
        EvalUnit::User => merge_user_documents(&foreign.labeled_only(), &prep, true)
            .into_iter()
            .filter_map(|d| d.label.map(|y| (d.stream, y)))
            .unzip(),
    };
    let pred: Vec<usize> = pipeline::predict_docs(model, &docs)?.iter().map(|p| p.label).collect();
    let n = model.n_classes();
    Ok(compute_metrics(&labels, &pred, &model.classes)?
        .with_baseline(stratified_baseline_expectation(&labels, &labels, n)))
}
