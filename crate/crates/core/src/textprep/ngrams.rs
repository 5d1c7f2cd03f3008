use std::collections::BTreeMap;

use super::TokenStream;

/// Sliding-window character n-grams over `text`, spaces included.
pub fn char_ngrams(text: &str, n_values: &[usize]) -> BTreeMap<String, usize> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = BTreeMap::new();
    for &n in n_values {
        if n == 0 || n > chars.len() {
            continue;
        }
        for w in chars.windows(n) {
            *out.entry(w.iter().collect::<String>()).or_insert(0) += 1;
        }
    }
    out
}

/// Adjacent token pairs (placeholders included) within each post.
pub fn token_bigrams(stream: &TokenStream) -> BTreeMap<(String, String), usize> {
    token_bigrams_with(stream, false)
}

/// As [`token_bigrams`]; with `cross_posts` the pairs also span the
/// boundary between merged posts.
pub fn token_bigrams_with(
    stream: &TokenStream,
    cross_posts: bool,
) -> BTreeMap<(String, String), usize> {
    let seqs = stream.sequences();
    let seqs: Vec<Vec<String>> = if cross_posts {
        vec![seqs.concat()]
    } else {
        seqs
    };
    let mut out = BTreeMap::new();
    for seq in &seqs {
        for w in seq.windows(2) {
            *out.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
        }
    }
    out
}
