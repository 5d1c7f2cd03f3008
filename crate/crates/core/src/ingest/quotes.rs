//! BBCode-style quote separation.

/// Authored text with quoted material removed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QuoteSplit {
    pub authored: String,
    /// Top-level quote blocks in source order; nested quotes stay inside
    /// their enclosing block with delimiters removed.
    pub quoted_blocks: Vec<String>,
    pub warnings: Vec<String>,
}

enum Tag {
    Open(usize),
    Close(usize),
}

/// Length of a quote tag at the start of `s`, if any. Openers are
/// `[quote]`, `[quote=...]` and `[quote ...]`; the closer is `[/quote]`.
fn tag_at(s: &str) -> Option<Tag> {
    let b = s.as_bytes();
    if b.first() != Some(&b'[') {
        return None;
    }
    let head = |n: usize| s.get(..n).map(str::to_ascii_lowercase);
    if head(8).as_deref() == Some("[/quote]") {
        return Some(Tag::Close(8));
    }
    if head(6).as_deref() != Some("[quote") {
        return None;
    }
    match b.get(6) {
        Some(b']') => Some(Tag::Open(7)),
        Some(b'=') | Some(b' ') => s[6..].find(']').map(|i| Tag::Open(6 + i + 1)),
        _ => None,
    }
}

/// Append `piece` to `buf`, collapsing the whitespace run at the junction.
fn join_piece(buf: &mut String, piece: &str) {
    if buf.ends_with(char::is_whitespace) {
        buf.push_str(piece.trim_start());
    } else {
        buf.push_str(piece);
    }
}

/// Separate quoted material from authored text with a depth-counting stack
/// parser. An unmatched opener quotes the rest of the text; a stray closer
/// is dropped. Both produce a warning.
pub fn strip_quotes(markup: &str) -> QuoteSplit {
    let mut out = QuoteSplit::default();
    let mut depth = 0usize;
    let mut authored_pieces: Vec<&str> = Vec::new();
    let mut block = String::new();
    let mut seg_start = 0usize;
    let mut i = 0usize;
    let mut found = false;

    while i < markup.len() {
        let Some(tag) = tag_at(&markup[i..]) else {
            i += markup[i..].chars().next().map_or(1, char::len_utf8);
            continue;
        };
        let piece = &markup[seg_start..i];
        match tag {
            Tag::Open(len) => {
                found = true;
                if depth == 0 {
                    authored_pieces.push(piece);
                } else {
                    block.push_str(piece);
                }
                depth += 1;
                i += len;
            }
            Tag::Close(len) => {
                found = true;
                if depth == 0 {
                    out.warnings.push(format!("stray quote closer at byte {i}"));
                    authored_pieces.push(piece);
                } else {
                    block.push_str(piece);
                    depth -= 1;
                    if depth == 0 {
                        out.quoted_blocks.push(block.trim().to_string());
                        block.clear();
                    }
                }
                i += len;
            }
        }
        seg_start = i;
    }
    let tail = &markup[seg_start..];
    if depth > 0 {
        block.push_str(tail);
        out.warnings.push(format!(
            "{depth} unclosed quote opener(s); remainder treated as quoted"
        ));
        out.quoted_blocks.push(block.trim().to_string());
    } else {
        authored_pieces.push(tail);
    }

    if !found {
        out.authored = markup.to_string();
        return out;
    }
    let mut authored = String::new();
    for p in authored_pieces {
        join_piece(&mut authored, p);
    }
    out.authored = authored.trim().to_string();
    out.quoted_blocks.retain(|b| !b.is_empty());
    for w in &out.warnings {
        log::warn!("quote parsing: {w}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(s: &str) -> (String, Vec<String>) {
        let q = strip_quotes(s);
        (q.authored, q.quoted_blocks)
    }

    #[test]
    fn simple_quote() {
        assert_eq!(
            split("I agree [quote]old text[/quote] strongly"),
            ("I agree strongly".to_string(), vec!["old text".to_string()])
        );
    }

    #[test]
    fn no_quotes_is_identity() {
        let s = "  plain text, nothing quoted ";
        assert_eq!(split(s), (s.to_string(), vec![]));
    }

    #[test]
    fn attributed_and_case_insensitive() {
        assert_eq!(
            split("[QUOTE=bob]hi[/Quote]ok"),
            ("ok".to_string(), vec!["hi".to_string()])
        );
        assert_eq!(
            split("[quote author=x date=1]hi[/quote] ok"),
            ("ok".to_string(), vec!["hi".to_string()])
        );
    }

    #[test]
    fn not_a_tag() {
        let s = "[quoted] text [quotation]";
        assert_eq!(split(s), (s.to_string(), vec![]));
    }

    #[test]
    fn unclosed_opener_quotes_remainder() {
        let q = strip_quotes("mine [quote]theirs and more");
        assert_eq!(q.authored, "mine");
        assert_eq!(q.quoted_blocks, vec!["theirs and more"]);
        assert_eq!(q.warnings.len(), 1);
    }

    #[test]
    fn stray_closer_is_dropped() {
        let q = strip_quotes("a [/quote] b");
        assert_eq!(q.authored, "a b");
        assert!(q.quoted_blocks.is_empty());
        assert_eq!(q.warnings.len(), 1);
    }

    /// Independent oracle: tokenise tags by regex-free scanning and rebuild
    /// the outputs with an explicit stack of strings.
    fn oracle(s: &str) -> (String, Vec<String>) {
        let lower = s.to_ascii_lowercase();
        let mut stack: Vec<String> = vec![String::new()];
        let mut blocks = Vec::new();
        let mut pos = 0;
        while pos < s.len() {
            if lower[pos..].starts_with("[/quote]") {
                if stack.len() > 1 {
                    let inner = stack.pop().unwrap();
                    if stack.len() == 1 {
                        blocks.push(inner.trim().to_string());
                    } else {
                        stack.last_mut().unwrap().push_str(&inner);
                    }
                }
                pos += 8;
            } else if lower[pos..].starts_with("[quote]") {
                stack.push(String::new());
                pos += 7;
            } else {
                let c = s[pos..].chars().next().unwrap();
                stack.last_mut().unwrap().push(c);
                pos += c.len_utf8();
            }
        }
        while stack.len() > 1 {
            let inner = stack.pop().unwrap();
            if stack.len() == 1 {
                blocks.push(inner.trim().to_string());
            } else {
                stack.last_mut().unwrap().push_str(&inner);
            }
        }
        let authored = stack.pop().unwrap().split_whitespace().collect::<Vec<_>>().join(" ");
        blocks.retain(|b| !b.is_empty());
        (authored, blocks)
    }

    #[test]
    fn matches_stack_oracle_on_fixtures() {
        let fixtures = [
            "I agree [quote]old text[/quote] strongly",
            "no quotes at all",
            "[quote]outer [quote]inner[/quote] tail[/quote] reply",
            "[quote]a[/quote][quote]b[/quote]c",
            "x [quote]one [quote]two [quote]three[/quote][/quote][/quote] y",
            "start [quote]never closed",
            "lead [quote]q1[/quote] mid [quote]q2[/quote] end",
            "[quote][/quote]empty block",
            "tail text [quote]nested [quote]open",
            "ünïcödé [quote]ẞ quoted[/quote] ok",
        ];
        for f in fixtures {
            let got = split(f);
            let want = oracle(f);
            let got_norm = got.0.split_whitespace().collect::<Vec<_>>().join(" ");
            assert_eq!((got_norm, got.1), want, "fixture {f:?}");
        }
    }

    #[test]
    fn doubly_nested_keeps_inner_text_in_outer_block() {
        let (a, b) = split("[quote]outer [quote]inner[/quote] tail[/quote] reply");
        assert_eq!(a, "reply");
        assert_eq!(b, vec!["outer inner tail"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn markup() -> impl Strategy<Value = String> {
            proptest::collection::vec(
                prop_oneof![
                    "[a-z ]{0,6}".prop_map(|s| s),
                    Just("[quote]".to_string()),
                    Just("[/quote]".to_string()),
                    Just("[quote=al]".to_string()),
                ],
                0..12,
            )
            .prop_map(|v| v.concat())
        }

        proptest! {
            #[test]
            fn idempotent(s in markup()) {
                let first = strip_quotes(&s);
                let again = strip_quotes(&first.authored);
                prop_assert_eq!(&again.authored, &first.authored);
                prop_assert!(again.quoted_blocks.is_empty());
            }

            #[test]
            fn only_delimiters_and_whitespace_are_lost(s in markup()) {
                let q = strip_quotes(&s);
                let strip = |t: &str| -> String {
                    t.replace("[quote=al]", "").replace("[quote]", "").replace("[/quote]", "")
                        .chars().filter(|c| !c.is_whitespace()).collect()
                };
                let mut kept: String = q.authored.chars().filter(|c| !c.is_whitespace()).collect();
                for b in &q.quoted_blocks {
                    kept.extend(b.chars().filter(|c| !c.is_whitespace()));
                }
                let mut want_sorted: Vec<char> = strip(&s).chars().collect();
                let mut kept_sorted: Vec<char> = kept.chars().collect();
                want_sorted.sort_unstable();
                kept_sorted.sort_unstable();
                prop_assert_eq!(kept_sorted, want_sorted);
            }

            #[test]
            fn authored_has_no_quoted_content_markers(s in markup()) {
                let q = strip_quotes(&s);
                prop_assert!(!q.authored.to_ascii_lowercase().contains("[quote"));
                prop_assert!(!q.authored.to_ascii_lowercase().contains("[/quote]"));
            }
        }
    }
}
