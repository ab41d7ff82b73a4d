//! Two-argument verb frames: the rule-based imperative parser, missing-role
//! detection, linearization, and candidate enumeration.
//!
//! A frame is `(v, r1, a1, r2, a2)`: a predicate from the verb lexicon, two
//! role labels registered for that predicate, and two arguments that are
//! single vocabulary tokens. An argument may be empty; downstream code
//! accepts at most one empty slot per frame.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;
use crate::pipeline::ObjectInventory;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("no lexicon verb occurs in the instruction")]
    NoPredicate,
    #[error("verb `{verb}` occurs with no candidate first argument")]
    MalformedFrame { verb: String },
    #[error("both arguments are empty; frames with two missing roles are rejected")]
    BothMissing,
    #[error("operation requires a complete frame but `{slot}` is empty")]
    IncompleteFrame { slot: String },
    #[error("operation requires an incomplete frame but all arguments are filled")]
    AlreadyComplete,
    #[error("object inventory is empty")]
    EmptyInventory,
    #[error("verb `{verb}` is not in the lexicon")]
    UnknownVerb { verb: String },
    #[error("cannot read lexicon file {path}: {source}")]
    LexiconIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed lexicon at line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },
}

/// Which role of a frame is unfilled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingRole {
    None,
    Role1,
    Role2,
}

/// How a frame is turned into a token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linearization {
    /// `[v, a1, a2]`, the raw concatenation.
    Frame,
    /// The verb's sentence template with both argument slots instantiated.
    Sentence,
}

impl fmt::Display for Linearization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Linearization::Frame => write!(f, "frame"),
            Linearization::Sentence => write!(f, "sentence"),
        }
    }
}

impl std::str::FromStr for Linearization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frame" => Ok(Linearization::Frame),
            "sentence" => Ok(Linearization::Sentence),
            other => Err(format!("unknown linearization `{other}` (expected frame|sentence)")),
        }
    }
}

/// A predicate with its two roles and arguments. Empty arguments are `None`
/// and serialize to JSON `null`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VerbFrame {
    pub v: String,
    pub r1: String,
    pub a1: Option<String>,
    pub r2: String,
    pub a2: Option<String>,
}

impl VerbFrame {
    pub fn new(
        v: impl Into<String>,
        r1: impl Into<String>,
        a1: Option<&str>,
        r2: impl Into<String>,
        a2: Option<&str>,
    ) -> Self {
        VerbFrame {
            v: v.into(),
            r1: r1.into(),
            a1: a1.map(str::to_string),
            r2: r2.into(),
            a2: a2.map(str::to_string),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.a1.is_some() && self.a2.is_some()
    }

    /// Identify the empty slot, rejecting doubly-empty frames.
    pub fn missing_role(&self) -> Result<MissingRole, FrameError> {
        match (&self.a1, &self.a2) {
            (Some(_), Some(_)) => Ok(MissingRole::None),
            (None, Some(_)) => Ok(MissingRole::Role1),
            (Some(_), None) => Ok(MissingRole::Role2),
            (None, None) => Err(FrameError::BothMissing),
        }
    }

    /// Both arguments, or an `IncompleteFrame` error naming the empty slot.
    pub fn complete_args(&self) -> Result<(&str, &str), FrameError> {
        let a1 = self.a1.as_deref().ok_or(FrameError::IncompleteFrame {
            slot: "a1".into(),
        })?;
        let a2 = self.a2.as_deref().ok_or(FrameError::IncompleteFrame {
            slot: "a2".into(),
        })?;
        Ok((a1, a2))
    }
}

impl fmt::Display for VerbFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a1 = self.a1.as_deref().unwrap_or("?");
        let a2 = self.a2.as_deref().unwrap_or("?");
        write!(f, "({}, {}: {}, {}: {})", self.v, self.r1, a1, self.r2, a2)
    }
}

/// A tokenized instruction awaiting parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub tokens: Sentence,
}

impl Instruction {
    pub fn from_text(raw: &str) -> Self {
        Instruction {
            tokens: crate::corpus::tokenize(raw),
        }
    }
}

/// Per-verb lexicon entry: the two role labels, the prepositions that
/// introduce the second role, and the sentence template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub role1: String,
    pub role2: String,
    pub prepositions: Vec<String>,
    pub template: String,
}

/// Determiners, pronouns, and quantifiers skipped when chunking arguments.
const FUNCTION_WORDS: &[&str] = &[
    "the", "a", "an", "some", "any", "me", "my", "your", "our", "their", "his", "her", "its",
    "this", "that", "these", "those", "few", "little", "bit", "of", "more", "all", "please",
];

/// The verb lexicon: predicate set, role inventory, preposition-to-role
/// mapping, and sentence templates. Immutable after load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleLexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

impl RoleLexicon {
    /// The built-in eleven-verb kitchen lexicon.
    pub fn builtin() -> Self {
        let rows: &[(&str, &str, &str, &str, &str)] = &[
            ("blend", "Theme", "Container", "in,into,with", "blend {a1} in the {a2}"),
            ("brush", "Theme", "Instrument", "with", "brush {a1} with the {a2}"),
            ("dip", "Theme", "Destination", "in,into", "dip {a1} in the {a2}"),
            ("dump", "Theme", "Destination", "into,in,onto", "dump {a1} into the {a2}"),
            ("fill", "Theme", "Substance", "with", "fill {a1} with {a2}"),
            ("fry", "Theme", "Container", "in,on", "fry {a1} in the {a2}"),
            ("heat", "Theme", "Container", "in,on", "heat {a1} in the {a2}"),
            ("pour", "Theme", "Destination", "into,in,to,onto", "pour {a1} to the {a2}"),
            ("rub", "Theme", "Instrument", "with,on", "rub {a1} with the {a2}"),
            ("season", "Theme", "Substance", "with", "season {a1} with {a2}"),
            ("sprinkle", "Theme", "Destination", "on,onto,over", "sprinkle {a1} on the {a2}"),
        ];
        let entries = rows
            .iter()
            .map(|(v, r1, r2, preps, tpl)| {
                (
                    v.to_string(),
                    LexiconEntry {
                        role1: r1.to_string(),
                        role2: r2.to_string(),
                        prepositions: preps.split(',').map(str::to_string).collect(),
                        template: tpl.to_string(),
                    },
                )
            })
            .collect();
        RoleLexicon { entries }
    }

    pub fn entry(&self, verb: &str) -> Option<&LexiconEntry> {
        self.entries.get(verb)
    }

    pub fn contains(&self, verb: &str) -> bool {
        self.entries.contains_key(verb)
    }

    pub fn verbs(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn insert(&mut self, verb: String, entry: LexiconEntry) -> Result<(), FrameError> {
        Self::validate_template(&verb, &entry.template, 0)?;
        self.entries.insert(verb, entry);
        Ok(())
    }

    fn validate_template(verb: &str, template: &str, line: usize) -> Result<(), FrameError> {
        let once = |slot: &str| template.matches(slot).count() == 1;
        if !once("{a1}") || !once("{a2}") {
            return Err(FrameError::MalformedLexicon {
                line,
                reason: format!("template for `{verb}` must contain {{a1}} and {{a2}} exactly once"),
            });
        }
        Ok(())
    }

    /// Load a TSV lexicon: `verb<TAB>role1<TAB>role2<TAB>prep1,prep2<TAB>template`.
    pub fn from_tsv(text: &str) -> Result<Self, FrameError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [verb, role1, role2, preps, template] = fields.as_slice() else {
                return Err(FrameError::MalformedLexicon {
                    line: i + 1,
                    reason: "expected 5 tab-separated fields".into(),
                });
            };
            Self::validate_template(verb, template, i + 1)?;
            entries.insert(
                verb.to_string(),
                LexiconEntry {
                    role1: role1.to_string(),
                    role2: role2.to_string(),
                    prepositions: preps
                        .split(',')
                        .filter(|p| !p.is_empty())
                        .map(str::to_string)
                        .collect(),
                    template: template.to_string(),
                },
            );
        }
        Ok(RoleLexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self, FrameError> {
        let text = fs::read_to_string(path).map_err(|source| FrameError::LexiconIo {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_tsv(&text)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (verb, e) in &self.entries {
            out.push_str(&format!(
                "{verb}\t{}\t{}\t{}\t{}\n",
                e.role1,
                e.role2,
                e.prepositions.join(","),
                e.template
            ));
        }
        out
    }
}

fn is_function_word(token: &str) -> bool {
    FUNCTION_WORDS.contains(&token)
}

/// Head noun of a chunk: the last token that is not a function word.
fn head_noun(chunk: &[String]) -> Option<&str> {
    chunk
        .iter()
        .rev()
        .find(|t| !is_function_word(t))
        .map(String::as_str)
}

/// Parse an instruction into verb frames, one per lexicon-verb occurrence,
/// in occurrence order.
///
/// For each verb, the first argument is the head noun of the chunk between
/// the verb and its first registered preposition (or segment end); the
/// second argument is the head noun after that preposition, else empty.
pub fn parse(instr: &Instruction, lex: &RoleLexicon) -> Result<Vec<VerbFrame>, FrameError> {
    let tokens = &instr.tokens.tokens;
    let verb_positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lex.contains(t))
        .map(|(i, _)| i)
        .collect();
    if verb_positions.is_empty() {
        return Err(FrameError::NoPredicate);
    }

    let mut frames = Vec::with_capacity(verb_positions.len());
    for (vi, &pos) in verb_positions.iter().enumerate() {
        let verb = &tokens[pos];
        let entry = lex.entry(verb).expect("verb position came from lexicon scan");
        let segment_end = verb_positions.get(vi + 1).copied().unwrap_or(tokens.len());
        let segment = &tokens[pos + 1..segment_end];

        let prep_pos = segment
            .iter()
            .position(|t| entry.prepositions.iter().any(|p| p == t));
        let (arg1_chunk, arg2_chunk) = match prep_pos {
            Some(p) => (&segment[..p], &segment[p + 1..]),
            None => (segment, &segment[segment.len()..]),
        };

        let a1 = head_noun(arg1_chunk).ok_or_else(|| FrameError::MalformedFrame {
            verb: verb.clone(),
        })?;
        let a2 = head_noun(arg2_chunk);

        frames.push(VerbFrame::new(
            verb.clone(),
            entry.role1.clone(),
            Some(a1),
            entry.role2.clone(),
            a2,
        ));
    }
    Ok(frames)
}

/// Serialize a complete frame into a token sequence.
pub fn linearize(
    frame: &VerbFrame,
    mode: Linearization,
    lex: &RoleLexicon,
) -> Result<Sentence, FrameError> {
    let (a1, a2) = frame.complete_args()?;
    match mode {
        Linearization::Frame => Ok(Sentence::new(vec![
            frame.v.clone(),
            a1.to_string(),
            a2.to_string(),
        ])),
        Linearization::Sentence => {
            let entry = lex.entry(&frame.v).ok_or_else(|| FrameError::UnknownVerb {
                verb: frame.v.clone(),
            })?;
            let tokens = entry
                .template
                .split_whitespace()
                .map(|t| match t {
                    "{a1}" => a1.to_string(),
                    "{a2}" => a2.to_string(),
                    other => other.to_string(),
                })
                .collect();
            Ok(Sentence::new(tokens))
        }
    }
}

/// One complete frame per distinct inventory label, substituted into the
/// single missing slot. Inventory order is preserved; duplicate labels are
/// dropped after their first occurrence.
pub fn candidates(
    frame: &VerbFrame,
    inventory: &ObjectInventory,
) -> Result<Vec<VerbFrame>, FrameError> {
    let missing = frame.missing_role()?;
    if missing == MissingRole::None {
        return Err(FrameError::AlreadyComplete);
    }
    if inventory.entries.is_empty() {
        return Err(FrameError::EmptyInventory);
    }
    let mut seen: Vec<&str> = Vec::new();
    let mut out = Vec::new();
    for obj in &inventory.entries {
        if seen.contains(&obj.label.as_str()) {
            continue;
        }
        seen.push(&obj.label);
        let mut filled = frame.clone();
        match missing {
            MissingRole::Role1 => filled.a1 = Some(obj.label.clone()),
            MissingRole::Role2 => filled.a2 = Some(obj.label.clone()),
            MissingRole::None => unreachable!(),
        }
        out.push(filled);
    }
    Ok(out)
}
