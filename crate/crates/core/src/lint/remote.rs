use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_builtin, rule_rank, LintFinding};
use crate::error::{Error, Result};
use crate::textprep::Dictionary;
use crate::util;

#[derive(Deserialize)]
struct CheckResponse {
    matches: Vec<RemoteMatch>,
}

#[derive(Deserialize)]
struct RemoteMatch {
    offset: usize,
    length: usize,
    rule: RemoteRule,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RemoteRule {
    id: String,
    issue_type: String,
    category: RemoteCategory,
}

#[derive(Deserialize)]
struct RemoteCategory {
    id: String,
}

/// Findings plus whether they came from the built-in fallback.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub findings: Vec<LintFinding>,
    pub fallback: bool,
}

/// Single request against a LanguageTool-compatible `/v2/check` endpoint.
pub fn check_remote(text: &str, endpoint: &str, timeout: Duration) -> Result<Vec<LintFinding>> {
    let agent = make_agent(timeout);
    request(&agent, text, endpoint)
}

fn make_agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into()
}

fn check_url(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    if base.ends_with("/v2/check") {
        base.to_string()
    } else {
        format!("{base}/v2/check")
    }
}

fn request(agent: &ureq::Agent, text: &str, endpoint: &str) -> Result<Vec<LintFinding>> {
    let mut resp = agent
        .post(&check_url(endpoint))
        .send_form([("text", text), ("language", "en-US")])
        .map_err(|e| Error::Remote(e.to_string()))?;
    let body = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| Error::Remote(e.to_string()))?;
    parse_response(text, &body)
}

/// Map a response body onto findings. Offsets in the protocol count UTF-16
/// code units; spans here are byte ranges into `text`.
pub(crate) fn parse_response(text: &str, body: &str) -> Result<Vec<LintFinding>> {
    let parsed: CheckResponse =
        serde_json::from_str(body).map_err(|e| Error::Remote(format!("malformed body: {e}")))?;
    let mut units = Vec::with_capacity(text.len() + 1);
    for (b, c) in text.char_indices() {
        for _ in 0..c.len_utf16() {
            units.push(b);
        }
    }
    units.push(text.len());
    let mut out = Vec::with_capacity(parsed.matches.len());
    for m in parsed.matches {
        let end_unit = m.offset + m.length;
        let (Some(&start), Some(&end)) = (units.get(m.offset), units.get(end_unit)) else {
            return Err(Error::Remote(format!(
                "match {}..{} outside text of {} units",
                m.offset,
                end_unit,
                units.len() - 1
            )));
        };
        if m.rule.id.is_empty() || m.rule.category.id.is_empty() || m.rule.issue_type.is_empty() {
            return Err(Error::Remote("match with empty rule descriptor".into()));
        }
        out.push(LintFinding::new(
            text,
            start..end,
            &m.rule.id,
            &m.rule.category.id,
            &m.rule.issue_type,
        ));
    }
    out.sort_by(|a, b| {
        a.span
            .start
            .cmp(&b.span.start)
            .then(rule_rank(&a.rule_id).cmp(&rule_rank(&b.rule_id)))
    });
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    text_hash: String,
    findings: Vec<LintFinding>,
}

/// Text-hash keyed store of remote results, persisted as JSONL.
#[derive(Debug, Default)]
pub struct FindingCache {
    entries: Mutex<HashMap<String, Vec<LintFinding>>>,
}

impl FindingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cache = Self::new();
        if !path.exists() {
            return Ok(cache);
        }
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut map = cache.entries.lock().unwrap();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CacheLine = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
            map.insert(rec.text_hash, rec.findings);
        }
        drop(map);
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map = self.entries.lock().unwrap();
        let mut keys: Vec<&String> = map.keys().collect();
        keys.sort();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        for k in keys {
            let rec = CacheLine {
                text_hash: k.clone(),
                findings: map[k].clone(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, text: &str) -> Option<Vec<LintFinding>> {
        self.entries.lock().unwrap().get(&util::sha256_hex(text.as_bytes())).cloned()
    }

    pub fn insert(&self, text: &str, findings: Vec<LintFinding>) {
        self.entries
            .lock()
            .unwrap()
            .insert(util::sha256_hex(text.as_bytes()), findings);
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shared client: caches by text hash and bounds concurrent requests.
#[derive(Debug)]
pub struct RemoteChecker {
    agent: ureq::Agent,
    endpoint: String,
    cache: FindingCache,
    max_in_flight: usize,
    in_flight: Mutex<usize>,
    slot_free: Condvar,
}

impl RemoteChecker {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, max_in_flight: usize) -> Self {
        Self {
            agent: make_agent(timeout),
            endpoint: endpoint.into(),
            cache: FindingCache::new(),
            max_in_flight: max_in_flight.max(1),
            in_flight: Mutex::new(0),
            slot_free: Condvar::new(),
        }
    }

    pub fn with_cache(mut self, cache: FindingCache) -> Self {
        self.cache = cache;
        self
    }

    pub fn cache(&self) -> &FindingCache {
        &self.cache
    }

    pub fn check(&self, text: &str) -> Result<Vec<LintFinding>> {
        if let Some(hit) = self.cache.get(text) {
            return Ok(hit);
        }
        {
            let mut n = self.in_flight.lock().unwrap();
            while *n >= self.max_in_flight {
                n = self.slot_free.wait(n).unwrap();
            }
            *n += 1;
        }
        let result = request(&self.agent, text, &self.endpoint);
        *self.in_flight.lock().unwrap() -= 1;
        self.slot_free.notify_one();
        let findings = result?;
        self.cache.insert(text, findings.clone());
        Ok(findings)
    }

    /// Remote result, or the built-in checker when the service fails.
    pub fn check_or_fallback(&self, text: &str, dictionary: &Dictionary) -> CheckOutcome {
        match self.check(text) {
            Ok(findings) => CheckOutcome {
                findings,
                fallback: false,
            },
            Err(e) => {
                log::warn!("remote checker failed, using built-in rules: {e}");
                CheckOutcome {
                    findings: check_builtin(text, dictionary),
                    fallback: true,
                }
            }
        }
    }
}
