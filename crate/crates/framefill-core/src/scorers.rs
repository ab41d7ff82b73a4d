//! Plausibility scoring over complete verb frames.
//!
//! Every scorer maps a complete frame to a real score (higher = more
//! plausible) behind the same `Scorer` trait:
//!
//! * language model: log-probability of the linearized frame;
//! * co-occurrence: `cooccur(v, a2) + cooccur(a1, a2)` with
//!   `cooccur(x, y) = count(x, y) / (count(x) * count(y))`;
//! * embedding: negated Euclidean distances `-(dist(v, a2) + dist(a1, a2))`;
//! * relatedness table: `rel(v, a2) + rel(a1, a2)`;
//! * seeded uniform random baseline.
//!
//! Out-of-vocabulary policy differs per scorer: count and relatedness
//! lookups contribute 0, while a frame with any unembedded token scores
//! negative infinity and ranks last.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::corpus::CooccurStats;
use crate::frames::{self, FrameError, Linearization, RoleLexicon, VerbFrame};
use crate::lm::{LmError, NGramModel};
use crate::util::{fnv1a, mix_seed};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error("candidate list is empty")]
    EmptyCandidateList,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed {what} file at line {line}: {reason}")]
    MalformedFile {
        what: &'static str,
        line: usize,
        reason: String,
    },
}

/// A plausibility scoring function over complete frames. Scoring never
/// mutates the scorer; deterministic scorers return the same score for the
/// same frame regardless of `scenario_seed`.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    fn deterministic(&self) -> bool {
        true
    }

    /// Score a complete frame. `scenario_seed` only matters for
    /// non-deterministic scorers; it pins the random baseline to its
    /// evaluation scenario.
    fn score(&self, frame: &VerbFrame, scenario_seed: u64) -> Result<f64, ScorerError>;
}

/// Index of the highest-scoring frame. Ties break by lexicographic order
/// of `(a1, a2)`, then by lowest index.
pub fn rank(
    scorer: &dyn Scorer,
    candidates: &[VerbFrame],
    scenario_seed: u64,
) -> Result<usize, ScorerError> {
    if candidates.is_empty() {
        return Err(ScorerError::EmptyCandidateList);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, frame) in candidates.iter().enumerate() {
        frame.complete_args()?;
        let s = scorer.score(frame, scenario_seed)?;
        let better = match best {
            None => true,
            Some((bi, bs)) => {
                s > bs
                    || (s == bs
                        && (candidates[i].a1.as_deref(), candidates[i].a2.as_deref())
                            < (candidates[bi].a1.as_deref(), candidates[bi].a2.as_deref()))
            }
        };
        if better {
            best = Some((i, s));
        }
    }
    Ok(best.expect("candidates non-empty").0)
}

/// Language-model scorer: log-probability of the linearized frame, in the
/// same mode the model was trained with.
#[derive(Debug)]
pub struct LmScorer {
    model: NGramModel,
    lexicon: RoleLexicon,
    name: String,
}

impl LmScorer {
    /// `mode` must match the model's training mode.
    pub fn new(
        model: NGramModel,
        mode: Linearization,
        lexicon: RoleLexicon,
    ) -> Result<Self, ScorerError> {
        if model.mode() != mode {
            return Err(ScorerError::Lm(LmError::ModeMismatch {
                model: model.mode(),
                requested: mode,
            }));
        }
        let name = format!("lm-{mode}");
        Ok(LmScorer {
            model,
            lexicon,
            name,
        })
    }

    pub fn model(&self) -> &NGramModel {
        &self.model
    }
}

impl Scorer for LmScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, frame: &VerbFrame, _scenario_seed: u64) -> Result<f64, ScorerError> {
        let seq = frames::linearize(frame, self.model.mode(), &self.lexicon)?;
        Ok(self.model.log_prob(&seq))
    }
}

/// Normalized sentence-level co-occurrence. Any term with a zero count
/// contributes 0; scores are always >= 0.
pub struct CooccurScorer {
    stats: CooccurStats,
}

impl CooccurScorer {
    pub fn new(stats: CooccurStats) -> Self {
        CooccurScorer { stats }
    }
}

impl Scorer for CooccurScorer {
    fn name(&self) -> &str {
        "cooccur"
    }

    fn score(&self, frame: &VerbFrame, _scenario_seed: u64) -> Result<f64, ScorerError> {
        let (a1, a2) = frame.complete_args()?;
        let cv = self.stats.count(&frame.v) as f64;
        let ca1 = self.stats.count(a1) as f64;
        let ca2 = self.stats.count(a2) as f64;
        let cva2 = self.stats.pair_count(&frame.v, a2) as f64;
        let ca1a2 = self.stats.pair_count(a1, a2) as f64;
        let verb_term = cv > 0.0 && ca2 > 0.0 && cva2 > 0.0;
        let arg_term = ca1 > 0.0 && ca2 > 0.0 && ca1a2 > 0.0;
        // The two-term sum is evaluated with a single division so that
        // relative order is preserved when every count scales uniformly
        // (e.g. a duplicated corpus): rounding once is monotone.
        Ok(match (verb_term, arg_term) {
            (false, false) => 0.0,
            (true, false) => cva2 / (cv * ca2),
            (false, true) => ca1a2 / (ca1 * ca2),
            (true, true) => (cva2 * ca1 + ca1a2 * cv) / (cv * ca1 * ca2),
        })
    }
}

/// Token embeddings of one shared dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    dim: usize,
}

impl EmbeddingTable {
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<(), ScorerError> {
        if self.vectors.is_empty() {
            self.dim = vector.len();
        }
        if vector.len() != self.dim || vector.is_empty() {
            return Err(ScorerError::MalformedFile {
                what: "embedding",
                line: 0,
                reason: format!(
                    "vector for `{token}` has dimension {} but table uses {}",
                    vector.len(),
                    self.dim
                ),
            });
        }
        self.vectors.insert(token.to_string(), vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Parse the GloVe-style text layout: `token v1 v2 ... vd`, one token
    /// per line.
    pub fn from_text(text: &str) -> Result<Self, ScorerError> {
        let mut table = EmbeddingTable::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap();
            let vector: Vec<f64> = fields
                .map(|v| v.parse())
                .collect::<Result<_, std::num::ParseFloatError>>()
                .map_err(|e| ScorerError::MalformedFile {
                    what: "embedding",
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            table.insert(token, vector).map_err(|e| match e {
                ScorerError::MalformedFile { what, reason, .. } => ScorerError::MalformedFile {
                    what,
                    line: i + 1,
                    reason,
                },
                other => other,
            })?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let text = fs::read_to_string(path).map_err(|source| ScorerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Negated embedding-distance scorer. Frames containing any token without
/// an embedding score negative infinity.
pub struct EmbeddingScorer {
    table: EmbeddingTable,
}

impl EmbeddingScorer {
    pub fn new(table: EmbeddingTable) -> Self {
        EmbeddingScorer { table }
    }
}

impl Scorer for EmbeddingScorer {
    fn name(&self) -> &str {
        "embedding"
    }

    fn score(&self, frame: &VerbFrame, _scenario_seed: u64) -> Result<f64, ScorerError> {
        let (a1, a2) = frame.complete_args()?;
        match (
            self.table.get(&frame.v),
            self.table.get(a1),
            self.table.get(a2),
        ) {
            (Some(v), Some(e1), Some(e2)) => Ok(-(euclidean(v, e2) + euclidean(e1, e2))),
            _ => Ok(f64::NEG_INFINITY),
        }
    }
}

/// Symmetric pair-relatedness lookup with values in [-1, 1]. Missing pairs
/// resolve to 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelatednessTable {
    scores: HashMap<(String, String), f64>,
}

impl RelatednessTable {
    pub fn insert(&mut self, x: &str, y: &str, score: f64) -> Result<(), ScorerError> {
        if !(-1.0..=1.0).contains(&score) {
            return Err(ScorerError::MalformedFile {
                what: "relatedness",
                line: 0,
                reason: format!("score {score} for ({x}, {y}) outside [-1, 1]"),
            });
        }
        let key = if x <= y { (x, y) } else { (y, x) };
        self.scores.insert((key.0.to_string(), key.1.to_string()), score);
        Ok(())
    }

    pub fn get(&self, x: &str, y: &str) -> f64 {
        let key = if x <= y { (x, y) } else { (y, x) };
        self.scores
            .get(&(key.0.to_string(), key.1.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Parse the TSV layout `tokenA<TAB>tokenB<TAB>score`.
    pub fn from_tsv<R: BufRead>(r: R) -> Result<Self, ScorerError> {
        let mut table = RelatednessTable::default();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| ScorerError::MalformedFile {
                what: "relatedness",
                line: i + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| ScorerError::MalformedFile {
                what: "relatedness",
                line: i + 1,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [a, b, score] = fields.as_slice() else {
                return Err(bad("expected 3 tab-separated fields".into()));
            };
            let score: f64 = score.parse().map_err(|e| bad(format!("bad score: {e}")))?;
            table.insert(a, b, score).map_err(|e| match e {
                ScorerError::MalformedFile { what, reason, .. } => ScorerError::MalformedFile {
                    what,
                    line: i + 1,
                    reason,
                },
                other => other,
            })?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let file = fs::File::open(path).map_err(|source| ScorerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_tsv(io::BufReader::new(file))
    }
}

/// Relatedness-table scorer: `rel(v, a2) + rel(a1, a2)`, each in [-1, 1].
pub struct RelatednessScorer {
    table: RelatednessTable,
}

impl RelatednessScorer {
    pub fn new(table: RelatednessTable) -> Self {
        RelatednessScorer { table }
    }
}

impl Scorer for RelatednessScorer {
    fn name(&self) -> &str {
        "relatedness"
    }

    fn score(&self, frame: &VerbFrame, _scenario_seed: u64) -> Result<f64, ScorerError> {
        let (a1, a2) = frame.complete_args()?;
        Ok(self.table.get(&frame.v, a2) + self.table.get(a1, a2))
    }
}

/// Uniform random baseline. The draw is a pure function of the scorer
/// seed, the scenario seed, and the frame, so results are reproducible and
/// independent of evaluation order or parallelism.
pub struct RandomScorer {
    seed: u64,
}

impl RandomScorer {
    pub fn new(seed: u64) -> Self {
        RandomScorer { seed }
    }
}

impl Scorer for RandomScorer {
    fn name(&self) -> &str {
        "random"
    }

    fn deterministic(&self) -> bool {
        false
    }

    fn score(&self, frame: &VerbFrame, scenario_seed: u64) -> Result<f64, ScorerError> {
        let (a1, a2) = frame.complete_args()?;
        let frame_hash = fnv1a(
            format!("{}\u{1}{}\u{1}{}\u{1}{}\u{1}{}", frame.v, frame.r1, a1, frame.r2, a2)
                .as_bytes(),
        );
        let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(mix_seed(self.seed, scenario_seed), frame_hash));
        Ok(rng.gen::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_cooccur, ingest_str, CorpusFormat};
    use crate::lm::{self, TrainingConfig};

    fn frame(v: &str, a1: &str, a2: &str) -> VerbFrame {
        VerbFrame::new(v, "Theme", Some(a1), "Destination", Some(a2))
    }

    fn toy_stats() -> CooccurStats {
        let doc = ingest_str(
            "d",
            "pour water cup\npour water cup\npour milk bowl",
            CorpusFormat::Lines,
        );
        build_cooccur([&doc])
    }

    #[test]
    fn cooccur_matches_hand_computation() {
        let scorer = CooccurScorer::new(toy_stats());
        let g = scorer.score(&frame("pour", "water", "cup"), 0).unwrap();
        // 2/(3*2) + 2/(2*2) = 5/6
        assert!((g - 5.0 / 6.0).abs() < 1e-12, "g = {g}");
        let g = scorer.score(&frame("pour", "milk", "bowl"), 0).unwrap();
        // 1/(3*1) + 1/(1*1) = 4/3
        assert!((g - 4.0 / 3.0).abs() < 1e-12, "g = {g}");
    }

    #[test]
    fn cooccur_zero_for_unrelated_words() {
        let scorer = CooccurScorer::new(toy_stats());
        // heat never occurs; milk and cup never share a sentence.
        let g = scorer.score(&frame("heat", "milk", "cup"), 0).unwrap();
        assert_eq!(g, 0.0);
        let g = scorer.score(&frame("stir", "soup", "pot"), 0).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn embedding_hand_arithmetic() {
        let mut table = EmbeddingTable::default();
        table.insert("pour", vec![1.0, 0.0]).unwrap();
        table.insert("water", vec![1.0, 1.0]).unwrap();
        table.insert("cup", vec![0.0, 1.0]).unwrap();
        let scorer = EmbeddingScorer::new(table);
        let g = scorer.score(&frame("pour", "water", "cup"), 0).unwrap();
        assert!((g - (-(2.0_f64.sqrt() + 1.0))).abs() < 1e-12, "g = {g}");
    }

    #[test]
    fn embedding_identical_vectors_score_zero() {
        let mut table = EmbeddingTable::default();
        for t in ["pour", "water", "cup"] {
            table.insert(t, vec![0.3, -0.7]).unwrap();
        }
        let scorer = EmbeddingScorer::new(table);
        assert_eq!(scorer.score(&frame("pour", "water", "cup"), 0).unwrap(), 0.0);
    }

    #[test]
    fn embedding_oov_scores_negative_infinity() {
        let mut table = EmbeddingTable::default();
        table.insert("pour", vec![1.0]).unwrap();
        table.insert("water", vec![0.0]).unwrap();
        let scorer = EmbeddingScorer::new(table);
        assert_eq!(
            scorer.score(&frame("pour", "water", "cup"), 0).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn embedding_table_rejects_mixed_dimensions() {
        let err = EmbeddingTable::from_text("a 1 2\nb 1 2 3").unwrap_err();
        assert!(matches!(err, ScorerError::MalformedFile { line: 2, .. }));
    }

    #[test]
    fn relatedness_sum_and_symmetry() {
        let mut table = RelatednessTable::default();
        table.insert("pour", "cup", 0.41).unwrap();
        table.insert("water", "cup", 0.52).unwrap();
        assert_eq!(table.get("cup", "pour"), table.get("pour", "cup"));
        let scorer = RelatednessScorer::new(table);
        let g = scorer.score(&frame("pour", "water", "cup"), 0).unwrap();
        assert!((g - 0.93).abs() < 1e-12);
    }

    #[test]
    fn relatedness_missing_pairs_score_zero() {
        let scorer = RelatednessScorer::new(RelatednessTable::default());
        assert_eq!(scorer.score(&frame("pour", "water", "cup"), 0).unwrap(), 0.0);
    }

    #[test]
    fn relatedness_rejects_out_of_range() {
        let mut table = RelatednessTable::default();
        assert!(table.insert("a", "b", 1.5).is_err());
    }

    #[test]
    fn random_scorer_is_seed_reproducible() {
        let a = RandomScorer::new(7);
        let b = RandomScorer::new(7);
        let c = RandomScorer::new(8);
        let f = frame("pour", "water", "cup");
        assert_eq!(a.score(&f, 3).unwrap(), b.score(&f, 3).unwrap());
        assert_ne!(a.score(&f, 3).unwrap(), a.score(&f, 4).unwrap());
        assert_ne!(a.score(&f, 3).unwrap(), c.score(&f, 3).unwrap());
    }

    #[test]
    fn lm_scorer_prefers_dominant_pattern() {
        let mut lines: Vec<String> = Vec::new();
        for _ in 0..100 {
            lines.push("pour water to the cup".into());
        }
        lines.push("pour water to the scissors".into());
        let doc = ingest_str("d", &lines.join("\n"), CorpusFormat::Lines);
        let lex = RoleLexicon::builtin();
        let model = lm::train(&[doc], TrainingConfig::default(), &lex).unwrap();
        let scorer = LmScorer::new(model, Linearization::Sentence, lex).unwrap();
        let cup = scorer.score(&frame("pour", "water", "cup"), 0).unwrap();
        let scissors = scorer.score(&frame("pour", "water", "scissors"), 0).unwrap();
        assert!(cup > scissors);
    }

    #[test]
    fn lm_scorer_mode_mismatch() {
        let doc = ingest_str("d", "pour water to the cup", CorpusFormat::Lines);
        let lex = RoleLexicon::builtin();
        let model = lm::train(&[doc], TrainingConfig::default(), &lex).unwrap();
        let err = LmScorer::new(model, Linearization::Frame, lex).unwrap_err();
        assert!(matches!(err, ScorerError::Lm(LmError::ModeMismatch { .. })));
    }

    #[test]
    fn incomplete_frame_is_a_precondition_error() {
        let scorer = CooccurScorer::new(toy_stats());
        let incomplete = VerbFrame::new("pour", "Theme", Some("water"), "Destination", None);
        assert!(matches!(
            scorer.score(&incomplete, 0),
            Err(ScorerError::Frame(FrameError::IncompleteFrame { .. }))
        ));
    }

    #[test]
    fn rank_argmax_and_ties() {
        struct Fixed(Vec<f64>);
        impl Scorer for Fixed {
            fn name(&self) -> &str {
                "fixed"
            }
            fn score(&self, f: &VerbFrame, _: u64) -> Result<f64, ScorerError> {
                // Encode the index in a2 as "obj<i>".
                let i: usize = f.a2.as_deref().unwrap()[3..].parse().unwrap();
                Ok(self.0[i])
            }
        }
        let frames: Vec<VerbFrame> = (0..3).map(|i| frame("pour", "water", &format!("obj{i}"))).collect();
        assert_eq!(rank(&Fixed(vec![0.2, 0.9, 0.1]), &frames, 0).unwrap(), 1);
        // All-equal scores: lexicographically smallest (a1, a2) wins.
        assert_eq!(rank(&Fixed(vec![1.0, 1.0, 1.0]), &frames, 0).unwrap(), 0);
        let reversed: Vec<VerbFrame> = frames.iter().rev().cloned().collect();
        assert_eq!(rank(&Fixed(vec![1.0, 1.0, 1.0]), &reversed, 0).unwrap(), 2);
        assert!(matches!(
            rank(&Fixed(vec![]), &[], 0),
            Err(ScorerError::EmptyCandidateList)
        ));
    }
}
