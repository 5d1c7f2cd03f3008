//! Forum crawl archives to corpus: latest-version-first page selection,
//! quote separation and two-stage user/post assembly.
//!
//! On disk an archive is a directory with one sub-directory per snapshot,
//! named by ISO date (`2014-06-01`). Each snapshot holds `*.jsonl` files of
//! page records `{"page_key", "kind": "thread"|"profile", "payload"}`.

mod adapter;
mod quotes;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{AgeGroup, Corpus, Gender, Post, UserRecord};
use crate::error::{Error, Result};

pub use adapter::{AdapterRegistry, BbcodeJsonAdapter, ForumAdapter, ProfileFields, BBCODE_JSON};
pub use quotes::{strip_quotes, QuoteSplit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageKind {
    Thread,
    Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PageRecord {
    pub page_key: String,
    pub kind: PageKind,
    #[serde(default)]
    pub snapshot_date: String,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub date: String,
    pub pages: Vec<PageRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotArchive {
    pub forum_name: String,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawPost {
    pub post_id: String,
    pub user_ref: String,
    pub authored_text: String,
    pub quoted_blocks: Vec<String>,
    pub posting_time: Option<String>,
    pub subforum: Option<String>,
}

/// Counters describing one ingestion run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub forum: String,
    pub canonical_pages: usize,
    pub skipped_pages: usize,
    pub profile_users: usize,
    pub synthetic_users: usize,
    pub posts: usize,
    pub duplicate_posts: usize,
    pub empty_posts: usize,
}

fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit())
}

impl SnapshotArchive {
    pub fn new(forum_name: impl Into<String>) -> Self {
        Self {
            forum_name: forum_name.into(),
            snapshots: Vec::new(),
        }
    }

    /// Load an archive directory. The forum name defaults to the directory
    /// name. Non-date entries are ignored with a warning.
    pub fn load(dir: &Path, forum_name: Option<&str>) -> Result<Self> {
        let forum = match forum_name {
            Some(f) => f.to_string(),
            None => dir
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| Error::InvalidArgument(format!("bad archive path {}", dir.display())))?
                .to_string(),
        };
        let mut archive = Self::new(forum);
        let mut dates = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if entry.path().is_dir() && is_iso_date(&name) {
                dates.push(name);
            } else {
                log::warn!("ignoring {} in archive {}", name, dir.display());
            }
        }
        dates.sort();
        for date in dates {
            let sdir = dir.join(&date);
            let mut files: Vec<_> = fs::read_dir(&sdir)
                .map_err(|e| Error::io(&sdir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            files.sort();
            let mut pages = Vec::new();
            for f in files {
                let reader = BufReader::new(fs::File::open(&f).map_err(|e| Error::io(&f, e))?);
                for (i, line) in reader.lines().enumerate() {
                    let line = line.map_err(|e| Error::io(&f, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let mut rec: PageRecord =
                        serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                            line: i + 1,
                            message: format!("{}: {e}", f.display()),
                        })?;
                    rec.snapshot_date = date.clone();
                    pages.push(rec);
                }
            }
            archive.snapshots.push(Snapshot { date, pages });
        }
        Ok(archive)
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.iter().all(|s| s.pages.is_empty())
    }
}

/// One record per page key, taken from the newest snapshot that holds it.
/// Output is ordered by page key.
pub fn canonicalize_latest_first(archive: &SnapshotArchive) -> Result<Vec<PageRecord>> {
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut best: BTreeMap<&str, (&str, &PageRecord)> = BTreeMap::new();
    for snap in &archive.snapshots {
        for page in &snap.pages {
            if !seen.insert((page.page_key.as_str(), snap.date.as_str())) {
                return Err(Error::DuplicatePage {
                    page_key: page.page_key.clone(),
                    snapshot_date: snap.date.clone(),
                });
            }
            let newer = best
                .get(page.page_key.as_str())
                .is_none_or(|(d, _)| snap.date.as_str() > *d);
            if newer {
                best.insert(&page.page_key, (&snap.date, page));
            }
        }
    }
    Ok(best
        .into_values()
        .map(|(date, p)| PageRecord {
            snapshot_date: date.to_string(),
            ..p.clone()
        })
        .collect())
}

enum Parsed {
    Profile(ProfileFields),
    Thread(Vec<RawPost>),
}

/// Two-stage assembly: users from profile pages, then posts from thread
/// pages, with guest authors created on the fly as synthetic users.
pub fn build_corpus(archive: &SnapshotArchive, adapter: &dyn ForumAdapter) -> Result<(Corpus, IngestReport)> {
    let forum = archive.forum_name.as_str();
    let pages = canonicalize_latest_first(archive)?;
    let mut report = IngestReport {
        forum: forum.to_string(),
        canonical_pages: pages.len(),
        ..Default::default()
    };

    let parsed: Vec<Option<Parsed>> = pages
        .par_iter()
        .map(|p| {
            let r = match p.kind {
                PageKind::Profile => adapter.parse_profile(&p.payload).map(Parsed::Profile),
                PageKind::Thread => adapter.parse_thread(&p.payload).map(Parsed::Thread),
            };
            r.map_err(|e| {
                log::warn!("{forum}: skipping page {} ({}): {e}", p.page_key, p.snapshot_date);
            })
            .ok()
        })
        .collect();
    report.skipped_pages = parsed.iter().filter(|p| p.is_none()).count();

    // stage 1: profile pages
    let mut users: BTreeMap<String, UserRecord> = BTreeMap::new();
    let mut by_ref: HashMap<String, String> = HashMap::new();
    let mut by_name: HashMap<String, String> = HashMap::new();
    for prof in parsed.iter().flatten().filter_map(|p| match p {
        Parsed::Profile(f) => Some(f),
        Parsed::Thread(_) => None,
    }) {
        let user_id = format!("{forum}/{}", prof.user_key);
        let mut rec = UserRecord::new(user_id.clone());
        rec.age_group = prof.age_group.as_deref().and_then(|a| {
            let g = AgeGroup::parse(a);
            if g.is_none() {
                log::warn!("{forum}: ignoring unknown age group {a:?} for {}", prof.user_key);
            }
            g
        });
        rec.gender = prof.gender.as_deref().and_then(|g| {
            let v = Gender::parse(g);
            if v.is_none() {
                log::warn!("{forum}: ignoring unknown gender {g:?} for {}", prof.user_key);
            }
            v
        });
        by_ref.insert(prof.user_key.clone(), user_id.clone());
        if !prof.display_name.is_empty() {
            by_name.entry(prof.display_name.clone()).or_insert_with(|| user_id.clone());
        }
        users.insert(user_id, rec);
    }
    report.profile_users = users.len();

    // stage 2: thread pages
    let mut posts = Vec::new();
    let mut post_ids = BTreeSet::new();
    for thread in parsed.into_iter().flatten().filter_map(|p| match p {
        Parsed::Thread(t) => Some(t),
        Parsed::Profile(_) => None,
    }) {
        for raw in thread {
            let post_id = format!("{forum}/{}", raw.post_id);
            if !post_ids.insert(post_id.clone()) {
                report.duplicate_posts += 1;
                continue;
            }
            if raw.authored_text.trim().is_empty() {
                report.empty_posts += 1;
                continue;
            }
            let user_id = match by_ref.get(&raw.user_ref).or_else(|| by_name.get(&raw.user_ref)) {
                Some(u) => u.clone(),
                None => {
                    let uid = format!("{forum}/{}", raw.user_ref);
                    users.entry(uid.clone()).or_insert_with(|| {
                        report.synthetic_users += 1;
                        let mut u = UserRecord::new(uid.clone());
                        u.synthetic = true;
                        u
                    });
                    by_ref.insert(raw.user_ref.clone(), uid.clone());
                    uid
                }
            };
            posts.push(Post {
                post_id,
                user_id,
                text: raw.authored_text,
                forum: Some(forum.to_string()),
                timestamp: raw.posting_time,
            });
        }
    }
    report.posts = posts.len();
    if report.duplicate_posts > 0 {
        log::info!("{forum}: dropped {} duplicate post(s)", report.duplicate_posts);
    }
    let corpus = Corpus::new(posts, users.into_values(), None)?;
    Ok((corpus, report))
}

/// Union of per-forum corpora. User and post ids are forum-namespaced, so
/// collisions indicate the same forum was ingested twice.
pub fn merge_corpora(parts: Vec<Corpus>) -> Result<Corpus> {
    let mut posts = Vec::new();
    let mut users: BTreeMap<String, UserRecord> = BTreeMap::new();
    for c in parts {
        for u in c.users() {
            if users.insert(u.user_id.clone(), u.clone()).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "user {:?} appears in more than one archive",
                    u.user_id
                )));
            }
        }
        posts.extend(c.posts().iter().cloned());
    }
    Corpus::new(posts, users.into_values(), None)
}
