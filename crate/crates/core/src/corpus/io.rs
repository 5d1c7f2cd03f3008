use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AgeGroup, Corpus, Gender, Post, Task, UserRecord};
use crate::artifact::{is_meta_line, ArtifactMeta};
use crate::error::{Error, Result};

/// One line of the corpus JSONL file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub post_id: String,
    pub user_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forum: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub synthetic: bool,
}

pub fn load_corpus(path: &Path, task: Option<Task>) -> Result<Corpus> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(f), task)
}

pub fn read_corpus<R: BufRead>(reader: R, task: Option<Task>) -> Result<Corpus> {
    let mut posts = Vec::new();
    let mut users: BTreeMap<String, UserRecord> = BTreeMap::new();
    let mut seen_ids = std::collections::HashSet::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: lineno,
            message: e.to_string(),
        })?;
        if is_meta_line(&value) {
            continue;
        }
        let rec: CorpusRecord =
            serde_json::from_value(value).map_err(|e| Error::MalformedRecord {
                line: lineno,
                message: e.to_string(),
            })?;
        if rec.user_id.is_empty() {
            return Err(Error::MalformedRecord {
                line: lineno,
                message: "empty user_id".into(),
            });
        }
        if !seen_ids.insert(rec.post_id.clone()) {
            return Err(Error::DuplicatePostId {
                line: lineno,
                post_id: rec.post_id,
            });
        }
        let age = match rec.age_group.as_deref() {
            None => None,
            Some(s) => Some(AgeGroup::parse(s).ok_or_else(|| Error::UnknownLabel {
                line: lineno,
                label: s.to_string(),
            })?),
        };
        let gender = match rec.gender.as_deref() {
            None => None,
            Some(s) => Some(Gender::parse(s).ok_or_else(|| Error::UnknownLabel {
                line: lineno,
                label: s.to_string(),
            })?),
        };
        let user = users
            .entry(rec.user_id.clone())
            .or_insert_with(|| UserRecord::new(rec.user_id.clone()));
        merge_label(&mut user.age_group, age, &rec.user_id)?;
        merge_label(&mut user.gender, gender, &rec.user_id)?;
        user.synthetic |= rec.synthetic;
        posts.push(Post {
            post_id: rec.post_id,
            user_id: rec.user_id,
            text: rec.text,
            forum: rec.forum,
            timestamp: rec.timestamp,
        });
    }
    let corpus = Corpus::new(posts, users.into_values(), task)?;
    let unlabeled = corpus.unlabeled_users();
    if !unlabeled.is_empty() {
        log::warn!(
            "{} user(s) lack the {} label and are excluded from training and evaluation",
            unlabeled.len(),
            task.map(Task::as_str).unwrap_or("task")
        );
    }
    Ok(corpus)
}

fn merge_label<L: PartialEq + Copy>(slot: &mut Option<L>, new: Option<L>, user: &str) -> Result<()> {
    match (*slot, new) {
        (_, None) => Ok(()),
        (None, Some(v)) => {
            *slot = Some(v);
            Ok(())
        }
        (Some(a), Some(b)) if a == b => Ok(()),
        _ => Err(Error::ConflictingLabels {
            user_id: user.to_string(),
        }),
    }
}

pub fn save_corpus(corpus: &Corpus, path: &Path, meta: Option<&ArtifactMeta>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_corpus(corpus, &mut w, meta).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_corpus<W: Write>(
    corpus: &Corpus,
    mut out: W,
    meta: Option<&ArtifactMeta>,
) -> std::io::Result<()> {
    if let Some(m) = meta {
        m.write_line(&mut out)?;
    }
    for p in corpus.posts() {
        let u = corpus.user(&p.user_id).expect("validated corpus");
        let rec = CorpusRecord {
            post_id: p.post_id.clone(),
            user_id: p.user_id.clone(),
            text: p.text.clone(),
            forum: p.forum.clone(),
            timestamp: p.timestamp.clone(),
            age_group: u.age_group.map(|a| a.as_str().to_string()),
            gender: u.gender.map(|g| g.as_str().to_string()),
            synthetic: u.synthetic,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
