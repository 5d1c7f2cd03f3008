//! Tokenization and the feature inventories built on it: token unigrams and
//! bigrams, the function/content word partition, character n-grams and the
//! chatspeak placeholder tokens.

mod chatspeak;
mod ngrams;
mod segment;
mod wordlists;

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lint::{self, LintFinding};

pub use chatspeak::{extract_chatspeak, extract_chatspeak_with, FloodThresholds};
pub use ngrams::{char_ngrams, token_bigrams, token_bigrams_with};
pub use segment::{match_emoticon, segment, Segment, SegmentKind};
pub use wordlists::{AcronymList, Dictionary, FunctionWordList};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChatspeakKind {
    CharFlood,
    PunctFlood,
    CharUpper,
    Emoji,
}

impl ChatspeakKind {
    pub const ALL: [ChatspeakKind; 4] = [
        ChatspeakKind::CharFlood,
        ChatspeakKind::PunctFlood,
        ChatspeakKind::CharUpper,
        ChatspeakKind::Emoji,
    ];

    pub fn placeholder(self) -> &'static str {
        match self {
            ChatspeakKind::CharFlood => "[char_flood]",
            ChatspeakKind::PunctFlood => "[punct_flood]",
            ChatspeakKind::CharUpper => "[char_upper]",
            ChatspeakKind::Emoji => "[emoji]",
        }
    }
}

/// A placeholder token and the byte span of the text that triggered it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatspeakToken {
    pub kind: ChatspeakKind,
    pub span: Range<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Punct,
    Emoticon,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// Normalized form: lower-cased words, emoticons verbatim.
    pub text: String,
    pub kind: TokenKind,
    pub span: Range<usize>,
}

/// Tokens, chatspeak placeholders and lint findings for one post, or for
/// several posts merged into one user document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub chatspeak_tokens: Vec<ChatspeakToken>,
    pub lint_findings: Vec<LintFinding>,
    /// Raw source text of each merged post (one entry for a single post).
    pub texts: Vec<String>,
    /// Index into `tokens` where each post in `texts` begins.
    pub post_starts: Vec<usize>,
}

impl TokenStream {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty() && self.chatspeak_tokens.is_empty()
    }

    pub fn word_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.kind == TokenKind::Word)
    }

    /// Tokens in source order with every placeholder replacing the token it
    /// came from, split per merged post.
    pub fn sequences(&self) -> Vec<Vec<String>> {
        let n_posts = self.post_starts.len().max(1);
        let mut out = Vec::with_capacity(n_posts);
        let mut cs = 0usize;
        for p in 0..n_posts {
            let start = self.post_starts.get(p).copied().unwrap_or(0);
            let end = self
                .post_starts
                .get(p + 1)
                .copied()
                .unwrap_or(self.tokens.len());
            let mut seq = Vec::new();
            for tok in &self.tokens[start..end] {
                let mut replaced = false;
                while cs < self.chatspeak_tokens.len()
                    && belongs_to(&self.chatspeak_tokens[cs].span, &tok.span)
                {
                    seq.push(self.chatspeak_tokens[cs].kind.placeholder().to_string());
                    cs += 1;
                    replaced = true;
                }
                if !replaced {
                    seq.push(tok.text.clone());
                }
            }
            out.push(seq);
        }
        out
    }

    /// Concatenate per-post streams into one user document. Spans are
    /// shifted as if the texts were joined with a single separator byte.
    pub fn merge(streams: &[TokenStream]) -> TokenStream {
        let mut out = TokenStream::default();
        let mut offset = 0usize;
        for s in streams {
            for &start in &s.post_starts {
                out.post_starts.push(out.tokens.len() + start);
            }
            let shift = |r: &Range<usize>| r.start + offset..r.end + offset;
            out.tokens.extend(s.tokens.iter().map(|t| Token {
                span: shift(&t.span),
                ..t.clone()
            }));
            out.chatspeak_tokens
                .extend(s.chatspeak_tokens.iter().map(|c| ChatspeakToken {
                    kind: c.kind,
                    span: shift(&c.span),
                }));
            out.lint_findings.extend(s.lint_findings.iter().map(|f| LintFinding {
                span: shift(&f.span),
                ..f.clone()
            }));
            for text in &s.texts {
                offset += text.len() + 1;
            }
            out.texts.extend(s.texts.iter().cloned());
        }
        out
    }
}

fn belongs_to(inner: &Range<usize>, outer: &Range<usize>) -> bool {
    inner.start >= outer.start && inner.start < outer.end
}

/// Configuration for turning raw post text into a [`TokenStream`].
#[derive(Clone, Debug)]
pub struct Preprocessor {
    pub function_words: Arc<FunctionWordList>,
    pub acronyms: Arc<AcronymList>,
    /// When set, the built-in standardness checker runs on every post.
    pub dictionary: Option<Arc<Dictionary>>,
    pub thresholds: FloodThresholds,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            function_words: Arc::new(FunctionWordList::default()),
            acronyms: Arc::new(AcronymList::default()),
            dictionary: None,
            thresholds: FloodThresholds::default(),
        }
    }
}

impl Preprocessor {
    /// Default lists plus the built-in dictionary, so lint features are on.
    pub fn with_lint() -> Self {
        Self {
            dictionary: Some(Arc::new(Dictionary::builtin())),
            ..Self::default()
        }
    }

    pub fn process(&self, text: &str) -> TokenStream {
        // chatspeak first: capitalization must still be visible
        let chatspeak_tokens = extract_chatspeak_with(text, &self.acronyms, self.thresholds);
        let tokens = normalize(text);
        let lint_findings = match &self.dictionary {
            Some(d) => lint::check_builtin(text, d),
            None => Vec::new(),
        };
        TokenStream {
            tokens,
            chatspeak_tokens,
            lint_findings,
            texts: vec![text.to_string()],
            post_starts: vec![0],
        }
    }
}

fn normalize(text: &str) -> Vec<Token> {
    segment(text)
        .into_iter()
        .map(|s| {
            let (kind, norm) = match s.kind {
                SegmentKind::Word => (TokenKind::Word, s.text.to_lowercase().replace('\u{2019}', "'")),
                SegmentKind::Punct => (TokenKind::Punct, s.text.to_string()),
                SegmentKind::Emoticon | SegmentKind::Emoji => (TokenKind::Emoticon, s.text.to_string()),
            };
            Token {
                text: norm,
                kind,
                span: s.span,
            }
        })
        .collect()
}

/// Tokenize with the default lists and no lint pass.
pub fn tokenize(text: &str) -> TokenStream {
    Preprocessor::default().process(text)
}

/// Partition word tokens into function and content words. Emoticons and
/// placeholders count as content; punctuation is in neither list.
pub fn split_function_content(
    stream: &TokenStream,
    fw: &FunctionWordList,
) -> (Vec<String>, Vec<String>) {
    let mut function = Vec::new();
    let mut content = Vec::new();
    for t in &stream.tokens {
        match t.kind {
            TokenKind::Word if fw.contains(&t.text) => function.push(t.text.clone()),
            TokenKind::Word | TokenKind::Emoticon => content.push(t.text.clone()),
            TokenKind::Punct => {}
        }
    }
    content.extend(
        stream
            .chatspeak_tokens
            .iter()
            .map(|c| c.kind.placeholder().to_string()),
    );
    (function, content)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_POST: &str = "ppl who stan her at this point are as ignorant as iggy stans i love \
                               azealias insite on racism but her mess makes it invalid";

    fn texts(s: &TokenStream) -> Vec<&str> {
        s.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn contraction_stays_one_token() {
        assert_eq!(texts(&tokenize("I've been here")), vec!["i've", "been", "here"]);
    }

    #[test]
    fn empty_text_gives_empty_stream() {
        let s = tokenize("");
        assert!(s.is_empty());
        assert_eq!(s.sequences(), vec![Vec::<String>::new()]);
    }

    #[test]
    fn table_two_post_word_count() {
        // hand count of the whitespace-separated words in the post
        let s = tokenize(SAMPLE_POST);
        assert_eq!(s.word_tokens().count(), 25);
        assert_eq!(SAMPLE_POST.split_whitespace().count(), 25);
    }

    #[test]
    fn placeholders_replace_their_tokens_in_sequence() {
        let s = tokenize("soooo cool!!! :)");
        assert_eq!(
            s.sequences()[0],
            vec!["[char_flood]", "cool", "[punct_flood]", "[emoji]"]
        );
    }

    #[test]
    fn function_content_partition() {
        let fw = FunctionWordList::from_words(["the", "ive"]);
        let s = tokenize("the dragon ive seen");
        let (f, c) = split_function_content(&s, &fw);
        assert_eq!(f, vec!["the", "ive"]);
        assert_eq!(c, vec!["dragon", "seen"]);
        let (f, c) = split_function_content(&tokenize("the ive the"), &fw);
        assert_eq!(f.len(), 3);
        assert!(c.is_empty());
    }

    #[test]
    fn nonstandard_function_word_example() {
        let fw = FunctionWordList::default();
        let (f, c) = split_function_content(&tokenize("the dragon ive seen"), &fw);
        assert!(f.contains(&"the".to_string()) && f.contains(&"ive".to_string()));
        assert_eq!(c, vec!["dragon", "seen"]);
    }

    #[test]
    fn merge_concatenates_tokens() {
        let a = tokenize("a b");
        let b = tokenize("c");
        let m = TokenStream::merge(&[a, b]);
        assert_eq!(texts(&m), vec!["a", "b", "c"]);
        assert_eq!(m.post_starts, vec![0, 2]);
        assert_eq!(m.sequences(), vec![vec!["a", "b"], vec!["c"]]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tokenize_is_total_and_ordered(text in "\\PC{0,80}") {
                let s = tokenize(&text);
                let mut last = 0;
                for t in &s.tokens {
                    prop_assert!(t.span.start >= last);
                    prop_assert!(t.span.end <= text.len());
                    last = t.span.end;
                }
                prop_assert_eq!(tokenize(&text), s);
            }

            #[test]
            fn function_content_is_a_partition(
                words in proptest::collection::vec("[a-z]{1,6}", 0..30)
            ) {
                let fw = FunctionWordList::default();
                let text = words.join(" ");
                let s = tokenize(&text);
                let (f, c) = split_function_content(&s, &fw);
                prop_assert_eq!(f.len() + c.len(), s.word_tokens().count() + s.chatspeak_tokens.len());
                prop_assert!(f.iter().all(|w| fw.contains(w)));
                prop_assert!(c.iter().all(|w| !fw.contains(w)));
            }
        }
    }
}
