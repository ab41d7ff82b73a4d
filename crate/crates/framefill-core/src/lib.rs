//! Completing incomplete natural-language task instructions.
//!
//! An imperative instruction like "pour me some water" leaves the destination
//! unstated. This crate parses such instructions into two-argument verb
//! frames, enumerates candidate role-fillers from an object inventory, ranks
//! the resulting complete frames with corpus-trained plausibility scorers,
//! and emits a symbolic waypoint plan for the winning frame.
//!
//! The crate also ships the full evaluation harness used to measure scorer
//! quality: human-judgment splits by plausibility threshold, k-candidate
//! scenario generation, per-predicate accuracy, and lambda/k parameter
//! sweeps with CSV reports.

pub mod corpus;
pub mod eval;
pub mod frames;
pub mod judgments;
pub mod lm;
pub mod pipeline;
pub mod scorers;
pub mod util;

pub use corpus::{CooccurStats, Document, Sentence, Vocabulary};
pub use frames::{Instruction, Linearization, RoleLexicon, VerbFrame};
pub use judgments::{PlausibilityRecord, Scenario, Splits};
pub use lm::{NGramModel, TrainingConfig};
pub use pipeline::{ActionTemplate, ObjectInventory, WaypointPlan};
pub use scorers::Scorer;
