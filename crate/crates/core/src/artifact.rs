//! Provenance header shared by every JSONL artifact the toolkit writes.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL_NAME: &str = "styloprof";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First line of a JSONL artifact: `{"_meta": {...}}`. Readers skip it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
}

impl ArtifactMeta {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            config_hash: config_hash.into(),
        }
    }

    pub fn write_line<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let line = serde_json::json!({ "_meta": self });
        writeln!(out, "{line}")
    }

    /// Extract the header from a parsed line, if it is one.
    pub fn from_value(v: &Value) -> Option<Self> {
        v.get("_meta")
            .and_then(|m| serde_json::from_value(m.clone()).ok())
    }

    /// Read the header of a JSONL file without loading the rest.
    pub fn read_from_path(path: &std::path::Path) -> Option<Self> {
        use std::io::BufRead;
        let f = std::fs::File::open(path).ok()?;
        let mut first = String::new();
        std::io::BufReader::new(f).read_line(&mut first).ok()?;
        let v: Value = serde_json::from_str(first.trim()).ok()?;
        Self::from_value(&v)
    }
}

pub(crate) fn is_meta_line(v: &Value) -> bool {
    v.get("_meta").is_some()
}
