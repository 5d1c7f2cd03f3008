//! Demographic distribution report: user counts per forum for each age
//! group and gender, with totals and percentage rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use styloprof::corpus::{AgeGroup, Corpus, Gender};

pub const BANNER: &str = "no ground truth available";
/// Row name used when no post carries a forum.
pub const SINGLE_FORUM: &str = "all";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForumRow {
    pub forum: String,
    pub users: usize,
    pub age: Vec<usize>,
    pub gender: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileReport {
    pub note: String,
    pub age_groups: Vec<String>,
    pub genders: Vec<String>,
    pub rows: Vec<ForumRow>,
    pub total: ForumRow,
    pub age_percent: Vec<f64>,
    pub gender_percent: Vec<f64>,
}

/// Percentages to one decimal that sum to exactly 100 (largest remainder).
/// All zeros when the counts are.
pub fn percentages(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    let exact: Vec<f64> = counts.iter().map(|&c| c as f64 * 1000.0 / total as f64).collect();
    let mut tenths: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let short = 1000 - tenths.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(short as usize) {
        tenths[i] += 1;
    }
    tenths.iter().map(|&t| t as f64 / 10.0).collect()
}

/// Tally users per forum. A user counts in every forum they posted in.
/// `forums` fixes the rows and their order; forums without users keep a
/// zero row. Users missing from a label map are left out of that task.
pub fn build_report(
    corpus: &Corpus,
    age: Option<&BTreeMap<String, usize>>,
    gender: Option<&BTreeMap<String, usize>>,
    forums: Option<&[String]>,
) -> ProfileReport {
    let mut members: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    let any_forum = corpus.posts().iter().any(|p| p.forum.is_some());
    for p in corpus.posts() {
        let f = match (&p.forum, any_forum) {
            (Some(f), _) => f.clone(),
            (None, true) => "(none)".to_string(),
            (None, false) => SINGLE_FORUM.to_string(),
        };
        members.entry(f).or_default().insert(&p.user_id);
    }
    let names: Vec<String> = match forums {
        Some(f) => f.to_vec(),
        None => members.keys().cloned().collect(),
    };
    let empty = BTreeSet::new();
    let row = |name: &str, users: &BTreeSet<&str>| {
        let mut a = vec![0; AgeGroup::ALL.len()];
        let mut g = vec![0; Gender::ALL.len()];
        for u in users {
            if let Some(&i) = age.and_then(|m| m.get(*u)) {
                a[i] += 1;
            }
            if let Some(&i) = gender.and_then(|m| m.get(*u)) {
                g[i] += 1;
            }
        }
        ForumRow {
            forum: name.to_string(),
            users: users.len(),
            age: a,
            gender: g,
        }
    };
    let rows: Vec<ForumRow> = names
        .iter()
        .map(|n| row(n, members.get(n).unwrap_or(&empty)))
        .collect();
    let mut total = ForumRow {
        forum: "Total".into(),
        users: 0,
        age: vec![0; AgeGroup::ALL.len()],
        gender: vec![0; Gender::ALL.len()],
    };
    for r in &rows {
        total.users += r.users;
        total.age.iter_mut().zip(&r.age).for_each(|(t, c)| *t += c);
        total.gender.iter_mut().zip(&r.gender).for_each(|(t, c)| *t += c);
    }
    ProfileReport {
        note: BANNER.into(),
        age_groups: AgeGroup::ALL.iter().map(|g| g.as_str().to_string()).collect(),
        genders: Gender::ALL.iter().map(|g| capitalize(g.as_str())).collect(),
        age_percent: percentages(&total.age),
        gender_percent: percentages(&total.gender),
        rows,
        total,
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl ProfileReport {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["Forum".to_string()];
        h.extend(self.age_groups.iter().cloned());
        h.extend(self.genders.iter().cloned());
        h
    }

    fn cells(r: &ForumRow, fmt: impl Fn(usize) -> String) -> Vec<String> {
        let mut c = vec![r.forum.clone()];
        c.extend(r.age.iter().chain(&r.gender).map(|&n| fmt(n)));
        c
    }

    fn percent_cells(&self) -> Vec<String> {
        let mut c = vec!["Total (%)".to_string()];
        c.extend(self.age_percent.iter().chain(&self.gender_percent).map(|p| format!("{p:.1}")));
        c
    }

    /// Aligned text table.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<Vec<String>> = vec![self.header()];
        lines.extend(self.rows.iter().map(|r| Self::cells(r, thousands)));
        lines.push(Self::cells(&self.total, thousands));
        lines.push(self.percent_cells());
        let n_cols = lines[0].len();
        let widths: Vec<usize> = (0..n_cols)
            .map(|j| lines.iter().map(|l| l[j].chars().count()).max().unwrap())
            .collect();
        let age_end = 1 + self.age_groups.len();
        let rule: String = {
            let inner: usize = widths.iter().sum::<usize>() + 2 * (n_cols - 1) + 2;
            "-".repeat(inner)
        };
        let mut out = format!("Users per age group and gender ({})\n", self.note);
        let body_start = 1;
        let body_end = 1 + self.rows.len();
        for (i, l) in lines.iter().enumerate() {
            if i == body_start || i == body_end {
                out.push_str(&rule);
                out.push('\n');
            }
            let mut s = String::new();
            for (j, cell) in l.iter().enumerate() {
                if j == 0 {
                    let _ = write!(s, "{cell:<w$}", w = widths[0]);
                } else {
                    let sep = if j == age_end { " | " } else { "  " };
                    let _ = write!(s, "{sep}{cell:>w$}", w = widths[j]);
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        let plain = |n: usize| n.to_string();
        for r in self.rows.iter().chain(std::iter::once(&self.total)) {
            out.push_str(&Self::cells(r, plain).join(","));
            out.push('\n');
        }
        out.push_str(&self.percent_cells().join(","));
        out.push('\n');
        out
    }
}
