//! Plain-text word lists: function words, acronym exemptions and the
//! spelling dictionary. One entry per line, `#` starts a comment line.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::util;

const FUNCTION_WORDS: &str = include_str!("../../data/function_words.txt");
const ACRONYMS: &str = include_str!("../../data/acronyms.txt");
const ENGLISH_WORDS: &str = include_str!("../../data/english_words.txt");
const DICTIONARY_EXTRA: &str = include_str!("../../data/dictionary_extra.txt");

fn entries(src: &str) -> impl Iterator<Item = &str> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn read_list(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Standard function words extended with non-standard spellings ("ive").
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionWordList {
    pub version: String,
    words: BTreeSet<String>,
}

impl FunctionWordList {
    pub fn parse(src: &str) -> Self {
        let words: BTreeSet<String> = entries(src).map(str::to_lowercase).collect();
        let joined: Vec<&str> = words.iter().map(String::as_str).collect();
        Self {
            version: util::sha256_hex(joined.join("\n").as_bytes())[..12].to_string(),
            words,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let list = Self::parse(&read_list(path)?);
        if list.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "function word list {} is empty",
                path.display()
            )));
        }
        Ok(list)
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined: Vec<String> = words.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
        Self::parse(&joined.join("\n"))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

impl Default for FunctionWordList {
    fn default() -> Self {
        Self::parse(FUNCTION_WORDS)
    }
}

/// Upper-case tokens that are not treated as shouting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcronymList {
    words: HashSet<String>,
}

impl AcronymList {
    pub fn parse(src: &str) -> Self {
        Self {
            words: entries(src).map(str::to_uppercase).collect(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_list(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(&token.to_uppercase())
    }
}

impl Default for AcronymList {
    fn default() -> Self {
        Self::parse(ACRONYMS)
    }
}

/// Lower-case spelling dictionary for the built-in checker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dictionary {
    words: HashSet<String>,
}

impl Dictionary {
    pub fn parse(src: &str) -> Self {
        Self {
            words: entries(src).map(str::to_lowercase).collect(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(Self::parse(&read_list(path)?))
    }

    pub fn builtin() -> Self {
        let mut d = Self::parse(ENGLISH_WORDS);
        d.words.extend(entries(DICTIONARY_EXTRA).map(str::to_lowercase));
        d
    }

    pub fn insert(&mut self, word: &str) {
        self.words.insert(word.to_lowercase());
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Whether a surface form is a known word. Handles common contractions
    /// by checking the stem before the clitic.
    pub fn knows(&self, surface: &str) -> bool {
        let w = surface.to_lowercase().replace('\u{2019}', "'");
        if self.words.contains(&w) {
            return true;
        }
        if matches!(w.as_str(), "can't" | "won't" | "shan't" | "ain't") {
            return true;
        }
        for clitic in ["n't", "'s", "'ve", "'re", "'ll", "'d", "'m", "'"] {
            if let Some(stem) = w.strip_suffix(clitic) {
                if !stem.is_empty() && self.words.contains(stem) {
                    return true;
                }
            }
        }
        false
    }
}
