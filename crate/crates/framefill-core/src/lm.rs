//! Count-based backoff n-gram language model.
//!
//! Sequence probability factorizes by the chain rule; each conditional is
//! an interpolated absolute-discount backoff estimate. Every observed
//! n-gram contributes counts at all context lengths, the top level mixes in
//! a small uniform component so unknown tokens always keep nonzero mass,
//! and the conditional distribution over the emission set (corpus tokens,
//! the unknown token, and end-of-sentence) sums to exactly 1.
//!
//! Boundary convention: each training or scored sequence is padded with
//! `order - 1` begin markers and one end marker.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, Sentence, Vocabulary, BOS_ID, EOS_ID};
use crate::frames::{self, FrameError, Instruction, Linearization, RoleLexicon};

/// Re-exported under the name most callers use.
pub type LinearizationMode = Linearization;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("no training sequences: {reason}")]
    EmptyTrainingSet { reason: String },
    #[error("model was trained in {model} mode but {requested} mode was requested")]
    ModeMismatch {
        model: Linearization,
        requested: Linearization,
    },
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed model artifact: {reason}")]
    MalformedArtifact { reason: String },
    #[error("model vocabulary hash {artifact:#x} does not match supplied vocabulary {supplied:#x}")]
    VocabularyMismatch { artifact: u64, supplied: u64 },
    #[error("invalid training config: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Training settings. Frame mode parses the corpus and trains on `[v, a1,
/// a2]` sequences; sentence mode trains on the raw sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub order: usize,
    pub mode: Linearization,
    /// Absolute discount subtracted from every observed continuation count.
    pub discount: f64,
    /// Minimum conditional probability of the unknown token in any context.
    pub unk_floor: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            order: 3,
            mode: Linearization::Sentence,
            discount: 0.1,
            unk_floor: 1e-8,
        }
    }
}

impl TrainingConfig {
    fn validate(&self) -> Result<(), LmError> {
        if self.order < 1 {
            return Err(LmError::InvalidConfig {
                reason: "order must be >= 1".into(),
            });
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(LmError::InvalidConfig {
                reason: "discount must be in [0, 1)".into(),
            });
        }
        if !(0.0..0.5).contains(&self.unk_floor) {
            return Err(LmError::InvalidConfig {
                reason: "unk_floor must be in [0, 0.5)".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    total: u64,
    continuations: HashMap<u32, u64>,
}

/// Trained model. Immutable; safe for concurrent scoring.
#[derive(Debug, Clone)]
pub struct NGramModel {
    config: TrainingConfig,
    vocab: Vocabulary,
    /// `contexts[k]` maps a length-k context (most recent token last) to
    /// its continuation counts.
    contexts: Vec<HashMap<Vec<u32>, ContextCounts>>,
}

const ARTIFACT_FORMAT: &str = "framefill-ngram";
const ARTIFACT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Artifact {
    format: String,
    version: u32,
    order: usize,
    mode: Linearization,
    discount: f64,
    unk_floor: f64,
    vocab_hash: u64,
    vocab: Vec<String>,
    /// Sorted rows `[context_len, count, token, ctx...]`.
    counts: Vec<Vec<u64>>,
}

/// Extract training sequences according to the linearization mode.
///
/// In frame mode, sentences that fail to parse or yield no complete frame
/// are skipped.
pub fn training_sequences(
    docs: &[Document],
    mode: Linearization,
    lex: &RoleLexicon,
) -> Vec<Sentence> {
    let mut out = Vec::new();
    for doc in docs {
        for sentence in &doc.sentences {
            if sentence.is_empty() {
                continue;
            }
            match mode {
                Linearization::Sentence => out.push(sentence.clone()),
                Linearization::Frame => {
                    let instr = Instruction {
                        tokens: sentence.clone(),
                    };
                    if let Ok(parsed) = frames::parse(&instr, lex) {
                        for frame in parsed {
                            if frame.is_complete() {
                                if let Ok(seq) = frames::linearize(&frame, Linearization::Frame, lex)
                                {
                                    out.push(seq);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Train a model over a document collection.
pub fn train(
    docs: &[Document],
    config: TrainingConfig,
    lex: &RoleLexicon,
) -> Result<NGramModel, LmError> {
    config.validate()?;
    let sequences = training_sequences(docs, config.mode, lex);
    if sequences.is_empty() {
        return Err(LmError::EmptyTrainingSet {
            reason: match config.mode {
                Linearization::Sentence => "corpus contains no sentences".into(),
                Linearization::Frame => "no sentence parsed into a complete frame".into(),
            },
        });
    }
    let vocab = Vocabulary::from_tokens(
        sequences
            .iter()
            .flat_map(|s| s.tokens.iter().cloned()),
    );
    let mut model = NGramModel {
        contexts: vec![HashMap::new(); config.order],
        config,
        vocab,
    };
    for seq in &sequences {
        model.count_sequence(seq);
    }
    Ok(model)
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.config.order
    }

    pub fn mode(&self) -> Linearization {
        self.config.mode
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Tokens the model can emit: corpus tokens, UNK, and EOS. The empty
    /// and begin-of-sentence markers are never predicted.
    pub fn emission_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.vocab.len() as u32)
            .filter(|&id| id != crate::corpus::EMPTY_ID && id != BOS_ID)
    }

    fn emission_size(&self) -> usize {
        self.vocab.len() - 2
    }

    fn count_sequence(&mut self, seq: &Sentence) {
        let n = self.config.order;
        let ids: Vec<u32> = seq
            .tokens
            .iter()
            .map(|t| self.vocab.id_or_unk(t))
            .collect();
        let mut padded: Vec<u32> = vec![BOS_ID; n - 1];
        padded.extend(&ids);
        padded.push(EOS_ID);
        // Events: each real token plus EOS, each with its full history.
        for t in (n - 1)..padded.len() {
            let w = padded[t];
            for k in 0..n {
                let ctx = padded[t - k..t].to_vec();
                let cc = self.contexts[k].entry(ctx).or_default();
                cc.total += 1;
                *cc.continuations.entry(w).or_insert(0) += 1;
            }
        }
    }

    /// Conditional probability of `token` after `context` (most recent
    /// token last). Both are vocabulary ids.
    pub fn cond_prob(&self, context: &[u32], token: u32) -> f64 {
        let n = self.config.order;
        let ctx = if context.len() >= n - 1 {
            &context[context.len() - (n - 1)..]
        } else {
            context
        };
        let m = self.emission_size() as f64;
        let floor_mix = (self.config.unk_floor * m).min(0.5);
        let backoff = self.prob_backoff(ctx.len(), ctx, token);
        (1.0 - floor_mix) * backoff + floor_mix / m
    }

    fn prob_backoff(&self, k: usize, ctx: &[u32], token: u32) -> f64 {
        let d = self.config.discount;
        if k == 0 {
            let cc = self.contexts[0]
                .get(&Vec::new())
                .expect("unigram context always present after training");
            let total = cc.total as f64;
            let c = cc.continuations.get(&token).copied().unwrap_or(0) as f64;
            let types = cc.continuations.len() as f64;
            let uniform = 1.0 / self.emission_size() as f64;
            ((c - d).max(0.0) + d * types * uniform) / total
        } else {
            match self.contexts[k].get(ctx) {
                None => self.prob_backoff(k - 1, &ctx[1..], token),
                Some(cc) => {
                    let total = cc.total as f64;
                    let c = cc.continuations.get(&token).copied().unwrap_or(0) as f64;
                    let types = cc.continuations.len() as f64;
                    let alpha = d * types / total;
                    (c - d).max(0.0) / total + alpha * self.prob_backoff(k - 1, &ctx[1..], token)
                }
            }
        }
    }

    /// Natural-log probability of the sequence, including the end marker.
    /// Out-of-vocabulary tokens map to UNK. Always finite and <= 0.
    pub fn log_prob(&self, seq: &Sentence) -> f64 {
        let n = self.config.order;
        let ids: Vec<u32> = seq
            .tokens
            .iter()
            .map(|t| self.vocab.id_or_unk(t))
            .collect();
        let mut padded: Vec<u32> = vec![BOS_ID; n - 1];
        padded.extend(&ids);
        padded.push(EOS_ID);
        let mut sum = 0.0;
        for t in (n - 1)..padded.len() {
            sum += self.cond_prob(&padded[t + 1 - n..t], padded[t]).ln();
        }
        sum
    }

    /// Sum of the conditional distribution over the emission set; 1 up to
    /// rounding for every context.
    pub fn conditional_sum(&self, context: &[u32]) -> f64 {
        self.emission_ids()
            .map(|id| self.cond_prob(context, id))
            .sum()
    }

    fn to_artifact(&self) -> Artifact {
        let mut counts = Vec::new();
        for (k, map) in self.contexts.iter().enumerate() {
            for (ctx, cc) in map {
                for (&w, &c) in &cc.continuations {
                    let mut row = vec![k as u64, c, w as u64];
                    row.extend(ctx.iter().map(|&id| id as u64));
                    counts.push(row);
                }
            }
        }
        counts.sort();
        Artifact {
            format: ARTIFACT_FORMAT.into(),
            version: ARTIFACT_VERSION,
            order: self.config.order,
            mode: self.config.mode,
            discount: self.config.discount,
            unk_floor: self.config.unk_floor,
            vocab_hash: self.vocab.hash(),
            vocab: self.vocab.tokens().to_vec(),
            counts,
        }
    }

    fn from_artifact(art: Artifact) -> Result<Self, LmError> {
        if art.format != ARTIFACT_FORMAT || art.version != ARTIFACT_VERSION {
            return Err(LmError::MalformedArtifact {
                reason: format!("unsupported format {}/{}", art.format, art.version),
            });
        }
        let vocab = Vocabulary::from_tokens(
            art.vocab
                .iter()
                .skip(4) // reserved tokens are re-added by the constructor
                .cloned(),
        );
        if vocab.hash() != art.vocab_hash {
            return Err(LmError::VocabularyMismatch {
                artifact: art.vocab_hash,
                supplied: vocab.hash(),
            });
        }
        let config = TrainingConfig {
            order: art.order,
            mode: art.mode,
            discount: art.discount,
            unk_floor: art.unk_floor,
        };
        config.validate()?;
        let mut contexts: Vec<HashMap<Vec<u32>, ContextCounts>> =
            vec![HashMap::new(); config.order];
        for row in &art.counts {
            let [k, c, w, ctx @ ..] = row.as_slice() else {
                return Err(LmError::MalformedArtifact {
                    reason: "count row too short".into(),
                });
            };
            let k = *k as usize;
            if k >= config.order || ctx.len() != k {
                return Err(LmError::MalformedArtifact {
                    reason: format!("count row has context length {} for order {k}", ctx.len()),
                });
            }
            let ctx: Vec<u32> = ctx.iter().map(|&id| id as u32).collect();
            let cc = contexts[k].entry(ctx).or_default();
            cc.total += c;
            cc.continuations.insert(*w as u32, *c);
        }
        Ok(NGramModel {
            config,
            vocab,
            contexts,
        })
    }

    /// Serialize to the versioned JSON artifact. Counts are sorted, so
    /// identical models produce identical bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_artifact()).expect("artifact serialization cannot fail")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LmError> {
        let art: Artifact =
            serde_json::from_slice(bytes).map_err(|e| LmError::MalformedArtifact {
                reason: e.to_string(),
            })?;
        Self::from_artifact(art)
    }

    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        fs::write(path, self.to_bytes()).map_err(|source| LmError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        let bytes = fs::read(path).map_err(|source| LmError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    /// Error if the supplied vocabulary differs from the model's.
    pub fn verify_vocabulary(&self, vocab: &Vocabulary) -> Result<(), LmError> {
        if self.vocab.hash() != vocab.hash() {
            return Err(LmError::VocabularyMismatch {
                artifact: self.vocab.hash(),
                supplied: vocab.hash(),
            });
        }
        Ok(())
    }
}
