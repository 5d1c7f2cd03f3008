//! Posts, users and labels, plus the user-disjoint splitting, grouped
//! k-fold and oversampling procedures built on top of them.

mod io;
mod split;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

pub use io::{load_corpus, read_corpus, save_corpus, write_corpus, CorpusRecord};
pub use split::{
    kfold_ids, kfold_user_groups, load_split, read_split, save_split, split_user_disjoint, Fold,
    Partition, SplitAssignment, SplitRecord, SplitReport, SPLIT_TOLERANCE,
};

/// Default minimum number of posts a user needs to enter the experiments.
pub const DEFAULT_MIN_POSTS: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeGroup {
    #[serde(rename = "18-24")]
    A18_24,
    #[serde(rename = "25-34")]
    A25_34,
    #[serde(rename = "35-49")]
    A35_49,
    #[serde(rename = "50-XX")]
    A50Plus,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 4] = [
        AgeGroup::A18_24,
        AgeGroup::A25_34,
        AgeGroup::A35_49,
        AgeGroup::A50Plus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgeGroup::A18_24 => "18-24",
            AgeGroup::A25_34 => "25-34",
            AgeGroup::A35_49 => "35-49",
            AgeGroup::A50Plus => "50-XX",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.as_str() == s)
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which demographic attribute a corpus is labeled for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Age,
    Gender,
}

impl Task {
    /// Class names in canonical order; class indices refer to this order.
    pub fn class_names(self) -> Vec<String> {
        match self {
            Task::Age => AgeGroup::ALL.iter().map(|a| a.as_str().to_string()).collect(),
            Task::Gender => Gender::ALL.iter().map(|g| g.as_str().to_string()).collect(),
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            Task::Age => AgeGroup::ALL.len(),
            Task::Gender => Gender::ALL.len(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "age" => Some(Task::Age),
            "gender" => Some(Task::Gender),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Age => "age",
            Task::Gender => "gender",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub user_id: String,
    /// Authored text only; quotations have already been removed.
    pub text: String,
    pub forum: Option<String>,
    pub timestamp: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub age_group: Option<AgeGroup>,
    pub gender: Option<Gender>,
    pub post_count: usize,
    /// Created during ingestion for an author without a profile page.
    #[serde(default)]
    pub synthetic: bool,
}

impl UserRecord {
    pub fn new(user_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            age_group: None,
            gender: None,
            post_count: 0,
            synthetic: false,
        }
    }

    /// Class index of this user's label for `task`, if labeled.
    pub fn class_index(&self, task: Task) -> Option<usize> {
        match task {
            Task::Age => self
                .age_group
                .map(|a| AgeGroup::ALL.iter().position(|x| *x == a).unwrap()),
            Task::Gender => self
                .gender
                .map(|g| Gender::ALL.iter().position(|x| *x == g).unwrap()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    posts: Vec<Post>,
    users: BTreeMap<String, UserRecord>,
    label_task: Option<Task>,
}

impl Corpus {
    /// Validate and assemble. Post counts on the user records are recomputed.
    pub fn new(
        posts: Vec<Post>,
        users: impl IntoIterator<Item = UserRecord>,
        label_task: Option<Task>,
    ) -> Result<Self> {
        let mut users: BTreeMap<String, UserRecord> = users
            .into_iter()
            .map(|mut u| {
                u.post_count = 0;
                (u.user_id.clone(), u)
            })
            .collect();
        let mut seen = BTreeSet::new();
        for (i, p) in posts.iter().enumerate() {
            if !seen.insert(p.post_id.as_str()) {
                return Err(Error::DuplicatePostId {
                    line: i + 1,
                    post_id: p.post_id.clone(),
                });
            }
            match users.get_mut(&p.user_id) {
                Some(u) => u.post_count += 1,
                None => {
                    return Err(Error::UnresolvedUser {
                        post_id: p.post_id.clone(),
                        user_id: p.user_id.clone(),
                    })
                }
            }
        }
        Ok(Self {
            posts,
            users,
            label_task,
        })
    }

    pub fn empty() -> Self {
        Self {
            posts: Vec::new(),
            users: BTreeMap::new(),
            label_task: None,
        }
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn users(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.values()
    }

    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.get(user_id)
    }

    pub fn user_ids(&self) -> Vec<String> {
        self.users.keys().cloned().collect()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty() && self.users.is_empty()
    }

    pub fn label_task(&self) -> Option<Task> {
        self.label_task
    }

    pub fn with_task(mut self, task: Option<Task>) -> Self {
        self.label_task = task;
        self
    }

    /// Class index for a user under the corpus task.
    pub fn user_label(&self, user_id: &str) -> Option<usize> {
        let task = self.label_task?;
        self.users.get(user_id)?.class_index(task)
    }

    /// Users lacking the label required by the corpus task.
    pub fn unlabeled_users(&self) -> Vec<&str> {
        match self.label_task {
            None => Vec::new(),
            Some(task) => self
                .users
                .values()
                .filter(|u| u.class_index(task).is_none())
                .map(|u| u.user_id.as_str())
                .collect(),
        }
    }

    /// Post indices grouped per user, users in id order.
    pub fn posts_by_user(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for u in self.users.keys() {
            out.insert(u.as_str(), Vec::new());
        }
        for (i, p) in self.posts.iter().enumerate() {
            out.get_mut(p.user_id.as_str())
                .expect("validated corpus")
                .push(i);
        }
        out
    }

    /// Sub-corpus restricted to the given users (post order preserved).
    pub fn restrict_to_users(&self, keep: &BTreeSet<String>) -> Corpus {
        let posts: Vec<Post> = self
            .posts
            .iter()
            .filter(|p| keep.contains(&p.user_id))
            .cloned()
            .collect();
        let users: Vec<UserRecord> = self
            .users
            .values()
            .filter(|u| keep.contains(&u.user_id))
            .cloned()
            .collect();
        Corpus::new(posts, users, self.label_task).expect("subset of a valid corpus")
    }

    /// Sub-corpus with only the users labeled for the current task.
    pub fn labeled_only(&self) -> Corpus {
        match self.label_task {
            None => self.clone(),
            Some(task) => {
                let keep = self
                    .users
                    .values()
                    .filter(|u| u.class_index(task).is_some())
                    .map(|u| u.user_id.clone())
                    .collect();
                self.restrict_to_users(&keep)
            }
        }
    }

    /// Copy with every user record passed through `f`; post counts are kept.
    pub fn map_users<F: FnMut(&mut UserRecord)>(&self, mut f: F) -> Corpus {
        let mut c = self.clone();
        for u in c.users.values_mut() {
            let count = u.post_count;
            f(u);
            u.post_count = count;
        }
        c
    }

    pub fn map_posts<F: FnMut(&mut Post)>(&self, mut f: F) -> Corpus {
        let mut c = self.clone();
        for p in &mut c.posts {
            let user = p.user_id.clone();
            let id = p.post_id.clone();
            f(p);
            p.user_id = user;
            p.post_id = id;
        }
        c
    }
}

/// Keep users with at least `min_posts` posts, and only their posts.
pub fn filter_min_posts(corpus: &Corpus, min_posts: usize) -> Result<Corpus> {
    if min_posts == 0 {
        return Err(Error::InvalidArgument("min_posts must be at least 1".into()));
    }
    let keep: BTreeSet<String> = corpus
        .users()
        .filter(|u| u.post_count >= min_posts)
        .map(|u| u.user_id.clone())
        .collect();
    Ok(corpus.restrict_to_users(&keep))
}

/// Random oversampling with replacement of every minority class up to the
/// majority count. Originals come first, in input order, followed by the
/// resampled copies class by class.
pub fn balance_training<T: Clone>(
    items: &[T],
    labels: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<usize>)> {
    if items.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: items.len(),
            actual: labels.len(),
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        if y >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label index {y} outside {n_classes} classes"
            )));
        }
        members[y].push(i);
    }
    if let Some(c) = members.iter().position(|m| m.is_empty()) {
        return Err(Error::InsufficientData(format!(
            "class {c} has no training items"
        )));
    }
    let majority = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = util::rng(seed);
    let mut out_items = items.to_vec();
    let mut out_labels = labels.to_vec();
    for (c, m) in members.iter().enumerate() {
        for _ in m.len()..majority {
            let pick = m[rng.gen_range(0..m.len())];
            out_items.push(items[pick].clone());
            out_labels.push(c);
        }
    }
    Ok((out_items, out_labels))
}

/// Per-class counts of a label vector.
pub fn class_counts(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, user: &str, text: &str) -> Post {
        Post {
            post_id: id.into(),
            user_id: user.into(),
            text: text.into(),
            forum: None,
            timestamp: None,
        }
    }

    fn corpus_with_counts(counts: &[usize]) -> Corpus {
        let mut posts = Vec::new();
        let mut users = Vec::new();
        for (u, &n) in counts.iter().enumerate() {
            let uid = format!("u{u}");
            users.push(UserRecord::new(uid.clone()));
            for i in 0..n {
                posts.push(post(&format!("{uid}-{i}"), &uid, "x"));
            }
        }
        Corpus::new(posts, users, None).unwrap()
    }

    #[test]
    fn filter_keeps_users_at_threshold() {
        let c = corpus_with_counts(&[20, 14, 15]);
        let f = filter_min_posts(&c, 15).unwrap();
        assert_eq!(f.user_ids(), vec!["u0".to_string(), "u2".to_string()]);
        assert_eq!(f.posts().len(), 35);
    }

    #[test]
    fn filter_min_one_is_identity() {
        let c = corpus_with_counts(&[3, 1, 7]);
        assert_eq!(filter_min_posts(&c, 1).unwrap(), c);
        assert!(filter_min_posts(&c, 0).is_err());
    }

    #[test]
    fn filter_matches_scan_on_poisson_counts() {
        let mut rng = util::rng(11);
        let counts: Vec<usize> = (0..100).map(|_| poisson(&mut rng, 12.0)).collect();
        let c = corpus_with_counts(&counts);
        let f = filter_min_posts(&c, 15).unwrap();
        let mut expected = Vec::new();
        for (u, &n) in counts.iter().enumerate() {
            if n >= 15 {
                expected.push(format!("u{u}"));
            }
        }
        expected.sort();
        assert_eq!(f.user_ids(), expected);
        for u in f.users() {
            assert!(u.post_count >= 15);
        }
    }

    // Knuth's multiplication method; good enough for a test fixture.
    fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> usize {
        let limit = (-lambda).exp();
        let mut k = 0;
        let mut p = 1.0;
        loop {
            p *= rng.gen::<f64>();
            if p <= limit {
                return k;
            }
            k += 1;
        }
    }

    #[test]
    fn balance_oversamples_minority() {
        let items: Vec<usize> = (0..140).collect();
        let labels: Vec<usize> = (0..140).map(|i| usize::from(i >= 100)).collect();
        let (out, y) = balance_training(&items, &labels, 2, 3).unwrap();
        assert_eq!(class_counts(&y, 2), vec![100, 100]);
        assert_eq!(&out[..140], &items[..]);
        assert!(out[140..].iter().all(|&i| i >= 100));
    }

    #[test]
    fn balance_identity_when_balanced() {
        let items: Vec<usize> = (0..100).collect();
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let (out, y) = balance_training(&items, &labels, 2, 9).unwrap();
        assert_eq!(out, items);
        assert_eq!(y, labels);
    }

    #[test]
    fn balance_table_one_proportions() {
        // Age totals 11428/11992/3802/1930 scaled down by ten.
        let counts = [1142usize, 1199, 380, 193];
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            labels.extend(std::iter::repeat(c).take(n));
        }
        let items: Vec<usize> = (0..labels.len()).collect();
        let (out, y) = balance_training(&items, &labels, 4, 1).unwrap();
        assert_eq!(class_counts(&y, 4), vec![1199; 4]);
        // recount: every resampled item keeps its original class
        for (item, label) in out.iter().zip(&y) {
            assert_eq!(labels[*item], *label);
        }
    }

    #[test]
    fn balance_rejects_empty_class() {
        assert!(balance_training(&[1, 2], &[0, 0], 2, 0).is_err());
    }

    #[test]
    fn duplicate_post_ids_rejected() {
        let users = vec![UserRecord::new("a")];
        let posts = vec![post("p", "a", "x"), post("p", "a", "y")];
        assert!(matches!(
            Corpus::new(posts, users, None),
            Err(Error::DuplicatePostId { .. })
        ));
    }

    #[test]
    fn unresolved_user_rejected() {
        let posts = vec![post("p", "ghost", "x")];
        assert!(matches!(
            Corpus::new(posts, Vec::new(), None),
            Err(Error::UnresolvedUser { .. })
        ));
    }
}
