use super::segment::{segment, SegmentKind};
use super::{AcronymList, ChatspeakKind, ChatspeakToken};

/// Minimum run lengths that count as flooding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FloodThresholds {
    /// identical letters inside a word
    pub letters: usize,
    /// identical punctuation marks
    pub punct: usize,
}

impl Default for FloodThresholds {
    fn default() -> Self {
        Self {
            letters: 3,
            punct: 2,
        }
    }
}

/// Chatspeak placeholders with default thresholds and acronym list.
pub fn extract_chatspeak(text: &str) -> Vec<ChatspeakToken> {
    extract_chatspeak_with(text, &AcronymList::default(), FloodThresholds::default())
}

pub fn extract_chatspeak_with(
    text: &str,
    acronyms: &AcronymList,
    thresholds: FloodThresholds,
) -> Vec<ChatspeakToken> {
    let mut out = Vec::new();
    for seg in segment(text) {
        match seg.kind {
            SegmentKind::Word => {
                for run in runs(seg.text, thresholds.letters, |c| c.is_alphabetic(), true) {
                    out.push(ChatspeakToken {
                        kind: ChatspeakKind::CharFlood,
                        span: seg.span.start + run.0..seg.span.start + run.1,
                    });
                }
                let letters = seg.text.chars().filter(|c| c.is_alphabetic()).count();
                let all_upper = seg
                    .text
                    .chars()
                    .filter(|c| c.is_alphabetic())
                    .all(char::is_uppercase);
                if letters >= 2 && all_upper && !acronyms.contains(seg.text) {
                    out.push(ChatspeakToken {
                        kind: ChatspeakKind::CharUpper,
                        span: seg.span.clone(),
                    });
                }
            }
            SegmentKind::Punct => {
                for run in runs(seg.text, thresholds.punct, |_| true, false) {
                    out.push(ChatspeakToken {
                        kind: ChatspeakKind::PunctFlood,
                        span: seg.span.start + run.0..seg.span.start + run.1,
                    });
                }
            }
            SegmentKind::Emoticon | SegmentKind::Emoji => out.push(ChatspeakToken {
                kind: ChatspeakKind::Emoji,
                span: seg.span.clone(),
            }),
        }
    }
    out.sort_by_key(|c| (c.span.start, c.kind));
    out
}

/// Byte ranges of maximal runs of one repeated character, at least `min` long.
fn runs(
    s: &str,
    min: usize,
    eligible: impl Fn(char) -> bool,
    fold_case: bool,
) -> Vec<(usize, usize)> {
    let key = |c: char| {
        if fold_case {
            c.to_lowercase().next().unwrap_or(c)
        } else {
            c
        }
    };
    let mut out = Vec::new();
    let mut start = 0;
    let mut len = 0;
    let mut prev: Option<char> = None;
    for (i, c) in s.char_indices() {
        if prev.is_some_and(|p| key(p) == key(c)) && eligible(c) {
            len += 1;
        } else {
            if len >= min && prev.is_some_and(&eligible) {
                out.push((start, i));
            }
            start = i;
            len = 1;
        }
        prev = Some(c);
    }
    if len >= min && prev.is_some_and(&eligible) {
        out.push((start, s.len()));
    }
    out
}
