use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use super::quotes::strip_quotes;
use super::RawPost;
use crate::error::{Error, Result};

/// Fields recovered from a user profile page.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProfileFields {
    pub user_key: String,
    pub display_name: String,
    pub age_group: Option<String>,
    pub gender: Option<String>,
}

/// Site-specific page parser. Implementations hold no mutable state and
/// may be called from several workers at once.
pub trait ForumAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn parse_profile(&self, payload: &Value) -> Result<ProfileFields>;
    fn parse_thread(&self, payload: &Value) -> Result<Vec<RawPost>>;
}

/// Reference adapter for the JSON fixture format with BBCode quote markers.
///
/// Profile payload: `{"user_key", "display_name", "age_group"?, "gender"?}`.
/// Thread payload: `{"thread_id", "subforum"?, "posts": [{"post_id",
/// "author", "time"?, "body"}]}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BbcodeJsonAdapter;

pub const BBCODE_JSON: &str = "bbcode-json";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfilePayload {
    user_key: String,
    display_name: String,
    #[serde(default)]
    age_group: Option<String>,
    #[serde(default)]
    gender: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThreadPayload {
    #[allow(dead_code)]
    thread_id: String,
    #[serde(default)]
    subforum: Option<String>,
    posts: Vec<PostPayload>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PostPayload {
    post_id: String,
    author: String,
    #[serde(default)]
    time: Option<String>,
    body: String,
}

impl ForumAdapter for BbcodeJsonAdapter {
    fn name(&self) -> &str {
        BBCODE_JSON
    }

    fn parse_profile(&self, payload: &Value) -> Result<ProfileFields> {
        let p = ProfilePayload::deserialize(payload).map_err(|e| Error::Adapter(e.to_string()))?;
        if p.user_key.is_empty() {
            return Err(Error::Adapter("profile without user_key".into()));
        }
        Ok(ProfileFields {
            user_key: p.user_key,
            display_name: p.display_name,
            age_group: p.age_group,
            gender: p.gender,
        })
    }

    fn parse_thread(&self, payload: &Value) -> Result<Vec<RawPost>> {
        let t = ThreadPayload::deserialize(payload).map_err(|e| Error::Adapter(e.to_string()))?;
        t.posts
            .into_iter()
            .map(|p| {
                if p.post_id.is_empty() || p.author.is_empty() {
                    return Err(Error::Adapter("post without id or author".into()));
                }
                let q = strip_quotes(&p.body);
                Ok(RawPost {
                    post_id: p.post_id,
                    user_ref: p.author,
                    authored_text: q.authored,
                    quoted_blocks: q.quoted_blocks,
                    posting_time: p.time,
                    subforum: t.subforum.clone(),
                })
            })
            .collect()
    }
}

/// Adapters by name.
#[derive(Clone)]
pub struct AdapterRegistry {
    adapters: BTreeMap<String, Arc<dyn ForumAdapter>>,
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        let mut r = Self {
            adapters: BTreeMap::new(),
        };
        r.register(Arc::new(BbcodeJsonAdapter));
        r
    }
}

impl AdapterRegistry {
    pub fn register(&mut self, adapter: Arc<dyn ForumAdapter>) {
        self.adapters.insert(adapter.name().to_string(), adapter);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ForumAdapter>> {
        self.adapters.get(name).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown adapter {name:?}; available: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.adapters.keys().map(String::as_str).collect()
    }
}
