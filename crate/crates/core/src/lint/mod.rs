//! Per-token "standardness" findings. The built-in checker covers the rule
//! families LanguageTool reports on short posts; the remote client speaks
//! the LanguageTool v2 protocol and maps its matches onto the same shape.

mod remote;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::textprep::{segment, Dictionary, SegmentKind};

pub use remote::{check_remote, CheckOutcome, FindingCache, RemoteChecker};

pub const MORFOLOGIK_RULE_EN: &str = "MORFOLOGIK_RULE_EN";
pub const UPPERCASE_SENTENCE_START: &str = "UPPERCASE_SENTENCE_START";
pub const I_LOWERCASE: &str = "I_LOWERCASE";
pub const COMMA_COMPOUND_SENTENCE_2: &str = "COMMA_COMPOUND_SENTENCE_2";

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LintFinding {
    pub span: Range<usize>,
    pub surface: String,
    pub rule_id: String,
    pub category: String,
    pub issue_type: String,
}

impl LintFinding {
    fn new(text: &str, span: Range<usize>, rule: &str, category: &str, issue: &str) -> Self {
        Self {
            surface: text[span.clone()].to_string(),
            span,
            rule_id: rule.to_string(),
            category: category.to_string(),
            issue_type: issue.to_string(),
        }
    }

    /// The descriptor triple that feature extraction consumes.
    pub fn triple(&self) -> (&str, &str, &str) {
        (&self.rule_id, &self.category, &self.issue_type)
    }
}

// subject-like words that open an independent clause after "but"
const CLAUSE_OPENERS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "her", "his", "my", "our", "their", "your", "its",
    "this", "that", "there", "the",
];

/// Rule order used to sort findings that share a start offset.
fn rule_rank(rule: &str) -> u8 {
    match rule {
        UPPERCASE_SENTENCE_START => 0,
        I_LOWERCASE => 1,
        MORFOLOGIK_RULE_EN => 2,
        _ => 3,
    }
}

/// Built-in standardness check: unknown words, lower-case sentence starts,
/// bare lower-case "i" and a missing comma before a clause-joining "but".
pub fn check_builtin(text: &str, dictionary: &Dictionary) -> Vec<LintFinding> {
    let segs = segment(text);
    let mut out = Vec::new();
    let mut sentence_start = true;
    let mut words_in_sentence = 0usize;
    for (i, seg) in segs.iter().enumerate() {
        match seg.kind {
            SegmentKind::Word => {
                let starts_lower = seg.text.chars().next().is_some_and(char::is_lowercase);
                if seg.text == "i" {
                    out.push(LintFinding::new(text, seg.span.clone(), I_LOWERCASE, "TYPOS", "misspelling"));
                } else {
                    if sentence_start && starts_lower {
                        out.push(LintFinding::new(
                            text,
                            seg.span.clone(),
                            UPPERCASE_SENTENCE_START,
                            "CASING",
                            "typographical",
                        ));
                    }
                    if is_misspelled(seg.text, sentence_start, dictionary) {
                        out.push(LintFinding::new(
                            text,
                            seg.span.clone(),
                            MORFOLOGIK_RULE_EN,
                            "TYPOS",
                            "misspelling",
                        ));
                    }
                }
                if seg.text.eq_ignore_ascii_case("but") && words_in_sentence >= 2 {
                    let prev_is_word = segs[i - 1].kind == SegmentKind::Word;
                    let next_opens_clause = segs.get(i + 1).is_some_and(|n| {
                        n.kind == SegmentKind::Word
                            && CLAUSE_OPENERS.contains(&n.text.to_lowercase().as_str())
                    });
                    if prev_is_word && next_opens_clause {
                        out.push(LintFinding::new(
                            text,
                            seg.span.clone(),
                            COMMA_COMPOUND_SENTENCE_2,
                            "PUNCTUATION",
                            "typographical",
                        ));
                    }
                }
                sentence_start = false;
                words_in_sentence += 1;
            }
            SegmentKind::Punct => {
                if seg.text.contains(['.', '!', '?']) {
                    sentence_start = true;
                    words_in_sentence = 0;
                }
            }
            SegmentKind::Emoticon | SegmentKind::Emoji => {}
        }
    }
    out.sort_by(|a, b| {
        a.span
            .start
            .cmp(&b.span.start)
            .then(rule_rank(&a.rule_id).cmp(&rule_rank(&b.rule_id)))
    });
    out
}

fn is_misspelled(word: &str, sentence_start: bool, dictionary: &Dictionary) -> bool {
    if word.chars().any(|c| c.is_numeric()) || dictionary.knows(word) {
        return false;
    }
    let mut chars = word.chars();
    let first_upper = chars.next().is_some_and(char::is_uppercase);
    let rest: Vec<char> = chars.collect();
    // capitalized mid-sentence words are taken as names; all-caps as acronyms
    if first_upper && !sentence_start && rest.iter().all(|c| !c.is_uppercase()) {
        return false;
    }
    if word.chars().count() >= 2 && word.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase) {
        return false;
    }
    true
}
