//! Splits raw text into word, punctuation and emoticon segments with byte
//! spans. Both the tokenizer and the chatspeak extractor work off this.

use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Word,
    Punct,
    Emoticon,
    Emoji,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment<'a> {
    pub kind: SegmentKind,
    pub span: Range<usize>,
    pub text: &'a str,
}

const CURATED: &[&str] = &[
    ":-)", ":)", ":-(", ":(", ";-)", ";)", ":-D", ":D", ";D", "=D", ":-P", ":P", ":-p", ":p", ";P",
    ";p", "=P", ":-O", ":O", ":o", ":'(", ":'-(", ":')", ":-/", ":/", ":\\", ":-|", ":|", ":*",
    ":-*", ":3", ":-3", ":]", ":[", ":>", ":<", ">:(", ">:)", ":@", "<3", "</3", "xD", "XD",
    "D:", "):", "(:", "=)", "=(", "^_^", "^^", "-_-", "o_O", "O_o", "o.O", "O.o", "T_T", ";_;",
    ">_<", "\\o/", "¯\\_(ツ)_/¯",
];

const EYES: &[char] = &[':', ';', '='];
const MOUTHS: &[char] = &['(', ')', '[', ']', '{', '}', '<', '>', '|', '/', '\\', '*'];

// never the first character of a generic face
const SENTENCE_PUNCT: &[char] = &['!', '?', '.', ',', '"', '\''];

const MAX_EMOTICON_CHARS: usize = 8;

pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F300..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x1F000..=0x1F02F
        | 0x1F0A0..=0x1F0FF
        | 0x1F100..=0x1F1FF
        | 0x2B50 | 0x2B55 | 0x203C | 0x2049)
}

fn is_emoji_joiner(c: char) -> bool {
    matches!(c as u32, 0x200D | 0xFE0F | 0xFE0E | 0x1F3FB..=0x1F3FF)
}

/// Letter-free symbol run that looks like a face.
fn is_generic_emoticon(s: &str) -> bool {
    let n = s.chars().count();
    if !(2..=MAX_EMOTICON_CHARS).contains(&n) {
        return false;
    }
    if s.chars().any(|c| c.is_alphanumeric() || c.is_whitespace() || is_emoji(c)) {
        return false;
    }
    let first = s.chars().next().unwrap();
    if SENTENCE_PUNCT.contains(&first) || s.chars().all(|c| c == first) {
        return false;
    }
    let has_eye = s.chars().any(|c| EYES.contains(&c));
    let has_mouth = s.chars().any(|c| MOUTHS.contains(&c));
    let kaomoji = (s.contains('_') || s.contains('^')) && s.chars().filter(|&c| c != '_').count() >= 2;
    (has_eye && has_mouth) || kaomoji
}

/// Byte length of the longest emoticon starting at the beginning of `s`.
pub fn match_emoticon(s: &str) -> Option<usize> {
    let mut best = None;
    for c in CURATED {
        if s.starts_with(c) && best.is_none_or(|b| c.len() > b) {
            best = Some(c.len());
        }
    }
    for (i, (pos, ch)) in s.char_indices().enumerate() {
        if i >= MAX_EMOTICON_CHARS || ch.is_alphanumeric() || ch.is_whitespace() {
            break;
        }
        let end = pos + ch.len_utf8();
        if is_generic_emoticon(&s[..end]) && best.is_none_or(|b| end > b) {
            best = Some(end);
        }
    }
    let len = best?;
    // right boundary; also keeps "http://" from yielding ":/"
    match s[len..].chars().next() {
        Some(c) if c.is_alphanumeric() || c == '/' => None,
        _ => Some(len),
    }
}

pub fn segment(text: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut chunk_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                segment_chunk(text, s, i, &mut out);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        segment_chunk(text, s, text.len(), &mut out);
    }
    out
}

fn push<'a>(out: &mut Vec<Segment<'a>>, text: &'a str, kind: SegmentKind, span: Range<usize>) {
    out.push(Segment {
        kind,
        text: &text[span.clone()],
        span,
    });
}

fn segment_chunk<'a>(text: &'a str, start: usize, end: usize, out: &mut Vec<Segment<'a>>) {
    let chunk = &text[start..end];
    if match_emoticon(chunk) == Some(chunk.len()) {
        push(out, text, SegmentKind::Emoticon, start..end);
        return;
    }
    let mut i = start;
    while i < end {
        let rest = &text[i..end];
        let c = rest.chars().next().unwrap();
        if is_emoji(c) {
            let mut j = i;
            for ch in rest.chars() {
                if is_emoji(ch) || (j > i && is_emoji_joiner(ch)) {
                    j += ch.len_utf8();
                } else {
                    break;
                }
            }
            push(out, text, SegmentKind::Emoji, i..j);
            i = j;
        } else if c.is_alphanumeric() {
            let mut j = i;
            let mut chars = rest.char_indices().peekable();
            while let Some((off, ch)) = chars.next() {
                if ch.is_alphanumeric() {
                    j = i + off + ch.len_utf8();
                } else if (ch == '\'' || ch == '\u{2019}')
                    && chars.peek().is_some_and(|(_, n)| n.is_alphanumeric())
                {
                    j = i + off + ch.len_utf8();
                } else {
                    break;
                }
            }
            push(out, text, SegmentKind::Word, i..j);
            i = j;
        } else if let Some(len) = match_emoticon(rest) {
            push(out, text, SegmentKind::Emoticon, i..i + len);
            i += len;
        } else {
            // punctuation run, stopping before an emoticon or a word
            let mut j = i + c.len_utf8();
            for ch in text[j..end].chars() {
                if ch.is_alphanumeric() || is_emoji(ch) || match_emoticon(&text[j..end]).is_some() {
                    break;
                }
                j += ch.len_utf8();
            }
            push(out, text, SegmentKind::Punct, i..j);
            i = j;
        }
    }
}
