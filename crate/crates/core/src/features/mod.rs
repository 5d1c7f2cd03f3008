//! Vocabulary construction, feature selection and representation.
//!
//! Features are namespaced strings (`w:the`, `c3:abc`, `cs:[emoji]`, ...).
//! A [`FeatureSpace`] is a list of blocks, one per feature kind, each with
//! its own selection and representation; vectors over a union are the
//! concatenation of per-block vectors.

mod select;
mod sparse;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textprep::{
    char_ngrams, split_function_content, token_bigrams, FunctionWordList, Preprocessor, TokenKind,
    TokenStream,
};
use crate::util;

pub use select::{
    chi2_scores, df_scores, mutual_information_scores, select_top_k, Chi2Pooling, SelectionMethod,
    MI_EPSILON,
};
pub use sparse::SparseVector;

pub const DEFAULT_K: usize = 10_000;
pub const DEFAULT_CHAR_N: [usize; 3] = [2, 3, 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Bow,
    Function,
    Content,
    Bigram,
    CharNgram,
    Chatspeak,
    Lint,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 7] = [
        FeatureKind::Bow,
        FeatureKind::Function,
        FeatureKind::Content,
        FeatureKind::Bigram,
        FeatureKind::CharNgram,
        FeatureKind::Chatspeak,
        FeatureKind::Lint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Bow => "bow",
            FeatureKind::Function => "function",
            FeatureKind::Content => "content",
            FeatureKind::Bigram => "bigram",
            FeatureKind::CharNgram => "char_ngram",
            FeatureKind::Chatspeak => "chatspeak",
            FeatureKind::Lint => "lint",
        }
    }

    /// Canonical names plus common plurals such as `char_ngrams`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match s.as_str() {
            "char_ngrams" | "chars" => "char_ngram",
            "bigrams" => "bigram",
            "words" | "unigrams" => "bow",
            "function_words" => "function",
            "content_words" => "content",
            other => other,
        };
        Self::ALL.into_iter().find(|k| k.as_str() == alias)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    #[default]
    Binary,
    Absolute,
    Tfidf,
    L2,
}

impl Representation {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Some(Self::Binary),
            "absolute" | "count" => Some(Self::Absolute),
            "tfidf" | "tf-idf" => Some(Self::Tfidf),
            "l2" | "l2norm" => Some(Self::L2),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Binary => "binary",
            Self::Absolute => "absolute",
            Self::Tfidf => "tfidf",
            Self::L2 => "l2",
        }
    }
}

/// Turns token streams into namespaced feature counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extractor {
    pub char_n: Vec<usize>,
    #[serde(with = "fw_serde")]
    pub function_words: Arc<FunctionWordList>,
}

mod fw_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(fw: &Arc<FunctionWordList>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let words: Vec<&str> = fw.iter().collect();
        words.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Arc<FunctionWordList>, D::Error> {
        let words = Vec::<String>::deserialize(d)?;
        Ok(Arc::new(FunctionWordList::from_words(words)))
    }
}

impl Default for Extractor {
    fn default() -> Self {
        Self {
            char_n: DEFAULT_CHAR_N.to_vec(),
            function_words: Arc::new(FunctionWordList::default()),
        }
    }
}

impl Extractor {
    pub fn extract(&self, stream: &TokenStream, kinds: &BTreeSet<FeatureKind>) -> BTreeMap<String, u32> {
        let mut out: BTreeMap<String, u32> = BTreeMap::new();
        let mut add = |k: String| *out.entry(k).or_insert(0) += 1;
        for &kind in kinds {
            match kind {
                FeatureKind::Bow => {
                    for t in stream.tokens.iter().filter(|t| t.kind != TokenKind::Punct) {
                        add(format!("w:{}", t.text));
                    }
                }
                FeatureKind::Function | FeatureKind::Content => {
                    let (f, c) = split_function_content(stream, &self.function_words);
                    if kind == FeatureKind::Function {
                        f.into_iter().for_each(|w| add(format!("fw:{w}")));
                    } else {
                        c.into_iter().for_each(|w| add(format!("cw:{w}")));
                    }
                }
                FeatureKind::Bigram => {
                    for ((a, b), n) in token_bigrams(stream) {
                        for _ in 0..n {
                            add(format!("b:{a} {b}"));
                        }
                    }
                }
                FeatureKind::CharNgram => {
                    for text in &stream.texts {
                        let lower = text.to_lowercase();
                        for &n in &self.char_n {
                            for (g, c) in char_ngrams(&lower, &[n]) {
                                for _ in 0..c {
                                    add(format!("c{n}:{g}"));
                                }
                            }
                        }
                    }
                }
                FeatureKind::Chatspeak => {
                    for c in &stream.chatspeak_tokens {
                        add(format!("cs:{}", c.kind.placeholder()));
                    }
                }
                FeatureKind::Lint => {
                    let mut spans = BTreeSet::new();
                    for f in &stream.lint_findings {
                        let (rule, cat, issue) = f.triple();
                        add(format!("lt:rule={rule}"));
                        add(format!("lt:cat={cat}"));
                        add(format!("lt:issue={issue}"));
                        spans.insert((f.span.start, f.span.end));
                    }
                    for _ in spans {
                        add("lt:nonstandard".to_string());
                    }
                }
            }
        }
        out
    }
}

/// Kind of a namespaced feature string.
pub fn kind_of(term: &str) -> Option<FeatureKind> {
    let (prefix, _) = term.split_once(':')?;
    Some(match prefix {
        "w" => FeatureKind::Bow,
        "fw" => FeatureKind::Function,
        "cw" => FeatureKind::Content,
        "b" => FeatureKind::Bigram,
        "cs" => FeatureKind::Chatspeak,
        "lt" => FeatureKind::Lint,
        p if p.len() > 1 && p.starts_with('c') && p[1..].bytes().all(|b| b.is_ascii_digit()) => {
            FeatureKind::CharNgram
        }
        _ => return None,
    })
}

/// Feature strings in column order: by kind, then lexicographic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    kinds: Vec<FeatureKind>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn kind(&self, i: usize) -> FeatureKind {
        self.kinds[i]
    }

    pub fn index_map(&self) -> HashMap<&str, usize> {
        self.terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect()
    }
}

pub fn build_vocabulary(
    docs: &[TokenStream],
    kinds: &BTreeSet<FeatureKind>,
    extractor: &Extractor,
) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::InsufficientData("no training documents".into()));
    }
    let mut per_kind: BTreeMap<FeatureKind, BTreeSet<String>> = BTreeMap::new();
    for &k in kinds {
        let one = BTreeSet::from([k]);
        let set = per_kind.entry(k).or_default();
        for d in docs {
            set.extend(extractor.extract(d, &one).into_keys());
        }
    }
    let mut vocab = Vocabulary::default();
    for (k, set) in per_kind {
        vocab.kinds.extend(std::iter::repeat_n(k, set.len()));
        vocab.terms.extend(set);
    }
    if vocab.is_empty() {
        return Err(Error::InsufficientData("no features extracted from training data".into()));
    }
    Ok(vocab)
}

/// Selection applied to one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionInfo {
    pub method: SelectionMethod,
    pub k: usize,
    pub pooling: Chi2Pooling,
    /// Vocabulary size before selection.
    pub candidates: usize,
}

/// Columns for one feature kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceBlock {
    pub kind: FeatureKind,
    pub terms: Vec<String>,
    /// Training document frequency of each kept term.
    pub df: Vec<u32>,
    pub selection: Option<SelectionInfo>,
    pub representation: Representation,
}

/// Immutable mapping from token streams to sparse vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "SpaceRepr", into = "SpaceRepr")]
pub struct FeatureSpace {
    blocks: Vec<SpaceBlock>,
    extractor: Extractor,
    n_train_docs: usize,
    fingerprint: String,
    offsets: Vec<usize>,
    index: HashMap<String, usize>,
    kinds: BTreeSet<FeatureKind>,
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    blocks: Vec<SpaceBlock>,
    extractor: Extractor,
    n_train_docs: usize,
    fingerprint: String,
}

impl From<SpaceRepr> for FeatureSpace {
    fn from(r: SpaceRepr) -> Self {
        Self::assemble(r.blocks, r.extractor, r.n_train_docs, r.fingerprint)
    }
}

impl From<FeatureSpace> for SpaceRepr {
    fn from(s: FeatureSpace) -> Self {
        Self {
            blocks: s.blocks,
            extractor: s.extractor,
            n_train_docs: s.n_train_docs,
            fingerprint: s.fingerprint,
        }
    }
}

impl PartialEq for FeatureSpace {
    fn eq(&self, other: &Self) -> bool {
        self.blocks == other.blocks
            && self.extractor == other.extractor
            && self.n_train_docs == other.n_train_docs
            && self.fingerprint == other.fingerprint
    }
}

/// Settings for [`build_space`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub kinds: Vec<FeatureKind>,
    pub selection: Option<SelectionMethod>,
    pub k: usize,
    pub pooling: Chi2Pooling,
    pub representation: Representation,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            kinds: vec![FeatureKind::CharNgram],
            selection: Some(SelectionMethod::Chi2),
            k: DEFAULT_K,
            pooling: Chi2Pooling::Max,
            representation: Representation::Binary,
        }
    }
}

/// Order-independent digest of a training partition.
pub fn training_fingerprint(docs: &[TokenStream]) -> String {
    let mut hashes: Vec<String> = docs
        .iter()
        .map(|d| util::sha256_hex(d.texts.join("\u{1e}").as_bytes()))
        .collect();
    hashes.sort_unstable();
    util::sha256_hex(hashes.join("\n").as_bytes())
}

/// Build a space from training documents only. Supervised selection needs
/// `labels`; each kind becomes its own block with its own top-k.
pub fn build_space(
    docs: &[TokenStream],
    labels: Option<(&[usize], usize)>,
    config: &SpaceConfig,
    extractor: &Extractor,
) -> Result<FeatureSpace> {
    if docs.is_empty() {
        return Err(Error::InsufficientData("no training documents".into()));
    }
    if config.kinds.is_empty() {
        return Err(Error::InvalidArgument("no feature kinds requested".into()));
    }
    if config.selection.is_some() && config.k == 0 {
        return Err(Error::InvalidArgument("selection k must be at least 1".into()));
    }
    let kinds: BTreeSet<FeatureKind> = config.kinds.iter().copied().collect();
    let extracted: Vec<BTreeMap<String, u32>> = docs.iter().map(|d| extractor.extract(d, &kinds)).collect();
    let fingerprint = training_fingerprint(docs);
    let mut per_kind: BTreeMap<FeatureKind, BTreeSet<&str>> = BTreeMap::new();
    for m in &extracted {
        for t in m.keys() {
            if let Some(k) = kind_of(t) {
                per_kind.entry(k).or_default().insert(t);
            }
        }
    }
    let mut blocks = Vec::new();
    for &kind in &kinds {
        let Some(terms) = per_kind.remove(&kind) else {
            log::warn!("feature kind {} produced no features", kind.as_str());
            continue;
        };
        let vocab = Vocabulary {
            kinds: vec![kind; terms.len()],
            terms: terms.into_iter().map(str::to_string).collect(),
        };
        let idx = vocab.index_map();
        let rows: Vec<Vec<usize>> = extracted
            .iter()
            .map(|m| m.keys().filter_map(|t| idx.get(t.as_str()).copied()).collect::<Vec<_>>())
            .map(|mut r| {
                r.sort_unstable();
                r
            })
            .collect();
        let df = df_scores(&rows, vocab.len())?;
        let (kept, selection) = match config.selection {
            None => ((0..vocab.len()).collect(), None),
            Some(method) => {
                let scores = match method {
                    SelectionMethod::Df => df.clone(),
                    SelectionMethod::Chi2 | SelectionMethod::Mi => {
                        let (y, c) = labels.ok_or_else(|| {
                            Error::InvalidArgument(format!("{} selection needs labels", method.as_str()))
                        })?;
                        if method == SelectionMethod::Chi2 {
                            chi2_scores(&rows, y, vocab.len(), c, config.pooling)?
                        } else {
                            mutual_information_scores(&rows, y, vocab.len(), c)?
                        }
                    }
                };
                (
                    select_top_k(&scores, config.k),
                    Some(SelectionInfo {
                        method,
                        k: config.k,
                        pooling: config.pooling,
                        candidates: vocab.len(),
                    }),
                )
            }
        };
        blocks.push(SpaceBlock {
            kind,
            terms: kept.iter().map(|&i| vocab.terms()[i].clone()).collect(),
            df: kept.iter().map(|&i| df[i] as u32).collect(),
            selection,
            representation: config.representation,
        });
    }
    if blocks.is_empty() {
        return Err(Error::InsufficientData("no features extracted from training data".into()));
    }
    Ok(FeatureSpace::assemble(blocks, extractor.clone(), docs.len(), fingerprint))
}

impl FeatureSpace {
    fn assemble(blocks: Vec<SpaceBlock>, extractor: Extractor, n_train_docs: usize, fingerprint: String) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut index = HashMap::new();
        let mut off = 0;
        for b in &blocks {
            offsets.push(off);
            for (i, t) in b.terms.iter().enumerate() {
                index.insert(t.clone(), off + i);
            }
            off += b.terms.len();
        }
        let kinds = blocks.iter().map(|b| b.kind).collect();
        Self {
            blocks,
            extractor,
            n_train_docs,
            fingerprint,
            offsets,
            index,
            kinds,
        }
    }

    /// A space with no columns, the identity for [`union_spaces`].
    pub fn empty(fingerprint: impl Into<String>) -> Self {
        Self::assemble(Vec::new(), Extractor::default(), 0, fingerprint.into())
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.terms.len()).sum()
    }

    pub fn blocks(&self) -> &[SpaceBlock] {
        &self.blocks
    }

    pub fn kinds(&self) -> &BTreeSet<FeatureKind> {
        &self.kinds
    }

    pub fn extractor(&self) -> &Extractor {
        &self.extractor
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn n_train_docs(&self) -> usize {
        self.n_train_docs
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, col: usize) -> Option<&str> {
        let b = self.offsets.iter().rposition(|&o| o <= col)?;
        self.blocks[b].terms.get(col - self.offsets[b]).map(String::as_str)
    }

    /// Preprocessing this space expects: lint findings only when lint
    /// features are present, and the space's own function word list.
    pub fn preprocessor(&self) -> Preprocessor {
        let base = if self.kinds.contains(&FeatureKind::Lint) {
            Preprocessor::with_lint()
        } else {
            Preprocessor::default()
        };
        Preprocessor {
            function_words: self.extractor.function_words.clone(),
            ..base
        }
    }

    pub fn vectorize<T: Scalar>(&self, stream: &TokenStream) -> SparseVector<T> {
        let counts = self.extractor.extract(stream, &self.kinds);
        self.vectorize_counts(&counts)
    }

    pub fn vectorize_counts<T: Scalar>(&self, counts: &BTreeMap<String, u32>) -> SparseVector<T> {
        let mut per_block: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.blocks.len()];
        for (term, &c) in counts {
            if let Some(&col) = self.index.get(term) {
                let b = self.offsets.partition_point(|&o| o <= col) - 1;
                per_block[b].push((col, c as f64));
            }
        }
        let n = self.n_train_docs as f64;
        let mut pairs = Vec::new();
        for (b, entries) in per_block.into_iter().enumerate() {
            let block = &self.blocks[b];
            let off = self.offsets[b];
            match block.representation {
                Representation::Binary => pairs.extend(entries.into_iter().map(|(i, _)| (i, T::one()))),
                Representation::Absolute => pairs.extend(entries.into_iter().map(|(i, c)| (i, T::of(c)))),
                Representation::Tfidf => pairs.extend(entries.into_iter().map(|(i, c)| {
                    let df = block.df[i - off] as f64;
                    (i, T::of(c * (((n + 1.0) / (df + 1.0)).ln() + 1.0)))
                })),
                Representation::L2 => {
                    let norm = entries.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        pairs.extend(entries.into_iter().map(|(i, c)| (i, T::of(c / norm))));
                    }
                }
            }
        }
        SparseVector::from_pairs(self.dim(), pairs).expect("columns come from this space")
    }
}

/// Column-wise union. All spaces must come from the same training data.
pub fn union_spaces(spaces: &[FeatureSpace]) -> Result<FeatureSpace> {
    let Some(first) = spaces.iter().find(|s| s.dim() > 0).or(spaces.first()) else {
        return Err(Error::InvalidArgument("union of zero spaces".into()));
    };
    let mut blocks = Vec::new();
    let mut seen = BTreeSet::new();
    let mut extractor = first.extractor.clone();
    for s in spaces {
        if s.dim() == 0 {
            continue;
        }
        if s.fingerprint != first.fingerprint {
            return Err(Error::PartitionMismatch);
        }
        if s.kinds.contains(&FeatureKind::CharNgram) {
            extractor.char_n = s.extractor.char_n.clone();
        }
        if s.kinds.contains(&FeatureKind::Function) || s.kinds.contains(&FeatureKind::Content) {
            extractor.function_words = s.extractor.function_words.clone();
        }
        for b in &s.blocks {
            if !seen.insert(b.kind) {
                return Err(Error::InvalidArgument(format!(
                    "feature kind {} appears in more than one space",
                    b.kind.as_str()
                )));
            }
            blocks.push(b.clone());
        }
    }
    blocks.sort_by_key(|b| b.kind);
    Ok(FeatureSpace::assemble(blocks, extractor, first.n_train_docs, first.fingerprint.clone()))
}
