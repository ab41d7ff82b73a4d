//! Corpus ingestion, tokenization, vocabulary, and sentence-level
//! co-occurrence statistics.
//!
//! Two input formats are supported: `lines` (one instruction per line) and
//! `recipe` (free text split on terminal punctuation; ingredient lists and
//! comments are kept verbatim). Counts are exact integers; any
//! normalization happens in the scorers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::fnv1a;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed stats file at line {line}: {reason}")]
    MalformedStats { line: usize, reason: String },
}

/// Input layout of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// One instruction per non-blank line.
    Lines,
    /// Free text; sentences split on `.` `!` `?` and line breaks. Noise
    /// such as ingredient lists is preserved.
    Recipe,
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusFormat::Lines => write!(f, "lines"),
            CorpusFormat::Recipe => write!(f, "recipe"),
        }
    }
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lines" => Ok(CorpusFormat::Lines),
            "recipe" => Ok(CorpusFormat::Recipe),
            other => Err(format!("unknown corpus format `{other}` (expected lines|recipe)")),
        }
    }
}

/// An ordered list of lowercase tokens. Tokens never contain whitespace and
/// are never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(tokens: Vec<String>) -> Self {
        Sentence { tokens }
    }

    pub fn from_words(words: &[&str]) -> Self {
        Sentence {
            tokens: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }
}

/// A tokenized source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Lowercase, split on whitespace, strip leading/trailing punctuation per
/// token, drop tokens that become empty. Digits and interior punctuation
/// (e.g. the apostrophe in "don't") are retained.
pub fn tokenize(raw: &str) -> Sentence {
    let tokens = raw
        .split_whitespace()
        .map(|w| {
            let lower = w.to_lowercase();
            // Trim to a fixpoint so mixed trailing runs like "?'" vanish.
            let mut t = lower.as_str();
            loop {
                let next = t
                    .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
                    .trim_matches('\'');
                if next == t {
                    break;
                }
                t = next;
            }
            t.to_string()
        })
        .filter(|t| !t.is_empty())
        .collect();
    Sentence { tokens }
}

/// Read one corpus file into a `Document`. An empty file yields an empty
/// document; callers decide whether that is worth a warning.
pub fn ingest(path: &Path, format: CorpusFormat) -> Result<Document, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(ingest_str(&path.display().to_string(), &text, format))
}

/// Ingest already-loaded text. The document id is caller-supplied.
pub fn ingest_str(id: &str, text: &str, format: CorpusFormat) -> Document {
    let sentences = match format {
        CorpusFormat::Lines => text
            .lines()
            .map(tokenize)
            .filter(|s| !s.is_empty())
            .collect(),
        CorpusFormat::Recipe => text
            .split(|c: char| c == '.' || c == '!' || c == '?' || c == '\n')
            .map(tokenize)
            .filter(|s| !s.is_empty())
            .collect(),
    };
    Document {
        id: id.to_string(),
        sentences,
    }
}

/// Token/id bijection with reserved ids for the empty argument, sentence
/// boundaries, and unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

pub const EMPTY_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const UNK_ID: u32 = 3;

pub const EMPTY_TOKEN: &str = "<empty>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

impl Vocabulary {
    /// Build from a sorted, deduplicated token set. Corpus tokens that
    /// collide with the reserved surface forms are skipped.
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let reserved = [EMPTY_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN];
        let mut sorted: Vec<String> = tokens
            .into_iter()
            .filter(|t| !reserved.contains(&t.as_str()))
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        sorted.sort();

        let mut all: Vec<String> = reserved.iter().map(|s| s.to_string()).collect();
        all.extend(sorted);
        let ids = all
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens: all, ids }
    }

    pub fn from_documents<'a, I: IntoIterator<Item = &'a Document>>(docs: I) -> Self {
        Self::from_tokens(
            docs.into_iter()
                .flat_map(|d| d.sentences.iter())
                .flat_map(|s| s.tokens.iter().cloned()),
        )
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    /// Like `id_of` but maps out-of-vocabulary tokens to `UNK_ID`.
    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id_of(token).unwrap_or(UNK_ID)
    }

    pub fn token_of(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Total number of ids, reserved ones included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Deterministic fingerprint of the token list, used to guard model
    /// artifacts against being loaded with the wrong vocabulary.
    pub fn hash(&self) -> u64 {
        let mut h = fnv1a(b"framefill-vocab-v1");
        for t in &self.tokens {
            h = h ^ fnv1a(t.as_bytes());
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Exact unigram and sentence-level pair counts.
///
/// `pair_count(x, y)` is the number of sentences containing both `x` and
/// `y` at least once; each sentence contributes at most 1 per pair.
/// Pairs are stored with their tokens in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CooccurStats {
    unigrams: HashMap<String, u64>,
    pairs: HashMap<(String, String), u64>,
}

impl CooccurStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Count one document's sentences into the stats.
    pub fn add_document(&mut self, doc: &Document) {
        for sentence in &doc.sentences {
            self.add_sentence(sentence);
        }
    }

    pub fn add_sentence(&mut self, sentence: &Sentence) {
        for token in &sentence.tokens {
            *self.unigrams.entry(token.clone()).or_insert(0) += 1;
        }
        let distinct: Vec<&String> = {
            let mut seen: Vec<&String> = Vec::new();
            for t in &sentence.tokens {
                if !seen.contains(&t) {
                    seen.push(t);
                }
            }
            seen
        };
        for (i, a) in distinct.iter().enumerate() {
            for b in distinct.iter().skip(i + 1) {
                let key = if a <= b {
                    ((*a).clone(), (*b).clone())
                } else {
                    ((*b).clone(), (*a).clone())
                };
                *self.pairs.entry(key).or_insert(0) += 1;
            }
        }
    }

    pub fn count(&self, token: &str) -> u64 {
        self.unigrams.get(token).copied().unwrap_or(0)
    }

    /// Symmetric pair lookup. Self-pairs always return 0.
    pub fn pair_count(&self, x: &str, y: &str) -> u64 {
        if x == y {
            return 0;
        }
        let key = if x <= y { (x, y) } else { (y, x) };
        self.pairs
            .get(&(key.0.to_string(), key.1.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// Commutative merge, enabling sharded counting.
    pub fn merge(&mut self, other: &CooccurStats) {
        for (t, c) in &other.unigrams {
            *self.unigrams.entry(t.clone()).or_insert(0) += c;
        }
        for (p, c) in &other.pairs {
            *self.pairs.entry(p.clone()).or_insert(0) += c;
        }
    }

    pub fn unigram_tokens(&self) -> impl Iterator<Item = &str> {
        self.unigrams.keys().map(String::as_str)
    }

    pub fn total_unigrams(&self) -> u64 {
        self.unigrams.values().sum()
    }

    /// Write the sorted TSV layout: a `token<TAB>count` section followed by
    /// a `tokenA<TAB>tokenB<TAB>count` section with tokenA < tokenB.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let unigrams: BTreeMap<&String, u64> =
            self.unigrams.iter().map(|(k, v)| (k, *v)).collect();
        for (t, c) in unigrams {
            writeln!(w, "{t}\t{c}")?;
        }
        let pairs: BTreeMap<&(String, String), u64> =
            self.pairs.iter().map(|(k, v)| (k, *v)).collect();
        for ((a, b), c) in pairs {
            writeln!(w, "{a}\t{b}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self, CorpusError> {
        let mut stats = CooccurStats::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| CorpusError::MalformedStats {
                line: i + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |reason: &str| CorpusError::MalformedStats {
                line: i + 1,
                reason: reason.to_string(),
            };
            match fields.as_slice() {
                [token, count] => {
                    let c = count.parse().map_err(|_| bad("bad unigram count"))?;
                    stats.unigrams.insert(token.to_string(), c);
                }
                [a, b, count] => {
                    let c = count.parse().map_err(|_| bad("bad pair count"))?;
                    if a >= b {
                        return Err(bad("pair tokens out of order"));
                    }
                    stats.pairs.insert((a.to_string(), b.to_string()), c);
                }
                _ => return Err(bad("expected 2 or 3 tab-separated fields")),
            }
        }
        Ok(stats)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, buf).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = fs::File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_tsv(io::BufReader::new(file))
    }
}

/// Build stats over a document collection.
pub fn build_cooccur<'a, I: IntoIterator<Item = &'a Document>>(docs: I) -> CooccurStats {
    let mut stats = CooccurStats::new();
    for doc in docs {
        stats.add_document(doc);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(lines: &[&str]) -> Document {
        Document {
            id: "test".into(),
            sentences: lines.iter().map(|l| tokenize(l)).collect(),
        }
    }

    #[test]
    fn tokenize_lowercases_and_strips_punctuation() {
        assert_eq!(
            tokenize("Pour me some water.").tokens,
            vec!["pour", "me", "some", "water"]
        );
    }

    #[test]
    fn tokenize_empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t ").is_empty());
        assert!(tokenize("... !!").is_empty());
    }

    #[test]
    fn tokenize_keeps_interior_apostrophe() {
        assert_eq!(tokenize("don't stir!").tokens, vec!["don't", "stir"]);
    }

    #[test]
    fn tokenize_retains_digits() {
        assert_eq!(tokenize("2 cups flour").tokens, vec!["2", "cups", "flour"]);
    }

    #[test]
    fn ingest_lines_format() {
        let d = ingest_str("d", "pour the water into a cup\nheat the pan", CorpusFormat::Lines);
        assert_eq!(d.sentences.len(), 2);
        let total: usize = d.sentences.iter().map(Sentence::len).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn ingest_empty_file_yields_empty_document() {
        let d = ingest_str("d", "", CorpusFormat::Lines);
        assert!(d.is_empty());
    }

    #[test]
    fn ingest_recipe_splits_on_terminal_punctuation() {
        let d = ingest_str("d", "2 cups flour. Mix well.", CorpusFormat::Recipe);
        assert_eq!(d.sentences.len(), 2);
        assert_eq!(d.sentences[0].tokens, vec!["2", "cups", "flour"]);
        assert_eq!(d.sentences[1].tokens, vec!["mix", "well"]);
    }

    #[test]
    fn ingest_recipe_keeps_noise_lines() {
        let d = ingest_str(
            "d",
            "Ingredients\n1 cup sugar\n2 eggs\nBeat the eggs. Add sugar!",
            CorpusFormat::Recipe,
        );
        assert_eq!(d.sentences.len(), 5);
        assert_eq!(d.sentences[0].tokens, vec!["ingredients"]);
    }

    #[test]
    fn cooccur_counts_match_hand_counts() {
        let d = doc(&["pour water cup", "pour water cup", "pour milk bowl"]);
        let stats = build_cooccur([&d]);
        assert_eq!(stats.count("pour"), 3);
        assert_eq!(stats.count("cup"), 2);
        assert_eq!(stats.pair_count("pour", "cup"), 2);
        assert_eq!(stats.pair_count("cup", "pour"), 2);
        assert_eq!(stats.pair_count("milk", "bowl"), 1);
    }

    #[test]
    fn single_token_sentence_adds_no_pairs() {
        let d = doc(&["stir"]);
        let stats = build_cooccur([&d]);
        assert_eq!(stats.count("stir"), 1);
        assert_eq!(stats.pairs.len(), 0);
    }

    #[test]
    fn repeated_token_counts_pair_once_per_sentence() {
        let d = doc(&["cup cup pour"]);
        let stats = build_cooccur([&d]);
        assert_eq!(stats.count("cup"), 2);
        assert_eq!(stats.pair_count("cup", "pour"), 1);
    }

    #[test]
    fn merge_equals_concatenation() {
        let d1 = doc(&["pour water cup", "heat the pan"]);
        let d2 = doc(&["pour milk bowl"]);
        let mut merged = build_cooccur([&d1]);
        merged.merge(&build_cooccur([&d2]));
        let whole = build_cooccur([&d1, &d2]);
        assert_eq!(merged, whole);
    }

    #[test]
    fn tsv_round_trip() {
        let d = doc(&["pour water cup", "pour milk bowl", "stir"]);
        let stats = build_cooccur([&d]);
        let mut buf = Vec::new();
        stats.write_tsv(&mut buf).unwrap();
        let loaded = CooccurStats::read_tsv(io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(stats, loaded);
    }

    #[test]
    fn tsv_is_sorted_and_deterministic() {
        let d = doc(&["zebra apple mango", "apple zebra"]);
        let stats = build_cooccur([&d]);
        let mut a = Vec::new();
        stats.write_tsv(&mut a).unwrap();
        let mut b = Vec::new();
        stats.write_tsv(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("apple\t"));
    }

    #[test]
    fn vocabulary_bijection_and_specials() {
        let d = doc(&["pour water cup"]);
        let v = Vocabulary::from_documents([&d]);
        assert_eq!(v.id_of(BOS_TOKEN), Some(BOS_ID));
        assert_eq!(v.id_of(EOS_TOKEN), Some(EOS_ID));
        assert_eq!(v.id_of(UNK_TOKEN), Some(UNK_ID));
        assert_eq!(v.id_of(EMPTY_TOKEN), Some(EMPTY_ID));
        for id in 0..v.len() as u32 {
            let tok = v.token_of(id).unwrap();
            assert_eq!(v.id_of(tok), Some(id));
        }
        assert_eq!(v.id_or_unk("zzz-not-here"), UNK_ID);
    }
}
