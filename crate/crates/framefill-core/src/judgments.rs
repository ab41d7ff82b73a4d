//! Human plausibility annotations, threshold splits, and k-candidate test
//! scenario generation.
//!
//! A rated frame with mean rating `m` is positive when `m > 5 - lambda`,
//! negative when `m < 1 + lambda`, and ambiguous otherwise (strict
//! inequalities). Scenarios hold the predicate and one argument fixed,
//! vary the other, and contain exactly one positive candidate.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::VerbFrame;

#[derive(Debug, Error)]
pub enum JudgmentError {
    #[error("plausibility threshold {lambda} outside (0, 2]")]
    InvalidLambda { lambda: f64 },
    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },
    #[error("scenario parameters invalid: {reason}")]
    InvalidScenarioConfig { reason: String },
    #[error(
        "no group can supply a scenario with k={k}: best group has {max_positives} positives and {max_negatives} usable negatives"
    )]
    InsufficientData {
        k: usize,
        max_positives: usize,
        max_negatives: usize,
    },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed judgment file at line {line}: {reason}")]
    MalformedFile { line: usize, reason: String },
}

/// A complete frame with its human ratings (1..=5 each).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityRecord {
    #[serde(flatten)]
    pub frame: VerbFrame,
    pub ratings: Vec<u8>,
}

/// The nominal number of ratings per frame; fewer is accepted with a
/// warning, more is fine.
pub const NOMINAL_RATINGS: usize = 5;

impl PlausibilityRecord {
    pub fn new(frame: VerbFrame, ratings: Vec<u8>) -> Self {
        PlausibilityRecord { frame, ratings }
    }

    pub fn mean(&self) -> f64 {
        self.ratings.iter().map(|&r| r as f64).sum::<f64>() / self.ratings.len() as f64
    }

    fn validate(&self, index: usize) -> Result<(), JudgmentError> {
        if self.ratings.is_empty() {
            return Err(JudgmentError::InvalidRecord {
                index,
                reason: "no ratings".into(),
            });
        }
        if self.ratings.iter().any(|&r| !(1..=5).contains(&r)) {
            return Err(JudgmentError::InvalidRecord {
                index,
                reason: "rating outside [1, 5]".into(),
            });
        }
        if !self.frame.is_complete() {
            return Err(JudgmentError::InvalidRecord {
                index,
                reason: "frame is incomplete".into(),
            });
        }
        Ok(())
    }
}

/// Validate a record batch. Returns warnings for records with fewer than
/// the nominal number of ratings.
pub fn validate_records(records: &[PlausibilityRecord]) -> Result<Vec<String>, JudgmentError> {
    let mut warnings = Vec::new();
    for (i, r) in records.iter().enumerate() {
        r.validate(i)?;
        if r.ratings.len() < NOMINAL_RATINGS {
            warnings.push(format!(
                "record {i} ({}) has only {} ratings",
                r.frame,
                r.ratings.len()
            ));
        }
    }
    Ok(warnings)
}

/// Load JSON Lines records: one `{"v", "r1", "a1", "r2", "a2", "ratings"}`
/// object per line.
pub fn load_records(path: &Path) -> Result<Vec<PlausibilityRecord>, JudgmentError> {
    let file = fs::File::open(path).map_err(|source| JudgmentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| JudgmentError::MalformedFile {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PlausibilityRecord =
            serde_json::from_str(&line).map_err(|e| JudgmentError::MalformedFile {
                line: i + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

pub fn save_records(records: &[PlausibilityRecord], path: &Path) -> Result<(), JudgmentError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("record serialization cannot fail");
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|source| JudgmentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Positive/ambiguous/negative subsets for one predicate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitSets {
    pub positive: Vec<PlausibilityRecord>,
    pub ambiguous: Vec<PlausibilityRecord>,
    pub negative: Vec<PlausibilityRecord>,
}

/// Per-predicate splits at one threshold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub lambda: f64,
    pub per_predicate: BTreeMap<String, SplitSets>,
}

pub fn check_lambda(lambda: f64) -> Result<(), JudgmentError> {
    if !(lambda > 0.0 && lambda <= 2.0) {
        return Err(JudgmentError::InvalidLambda { lambda });
    }
    Ok(())
}

/// Partition records per predicate by the threshold rule.
pub fn split(records: &[PlausibilityRecord], lambda: f64) -> Result<Splits, JudgmentError> {
    check_lambda(lambda)?;
    let mut per_predicate: BTreeMap<String, SplitSets> = BTreeMap::new();
    for record in records {
        let sets = per_predicate.entry(record.frame.v.clone()).or_default();
        let mean = record.mean();
        if mean > 5.0 - lambda {
            sets.positive.push(record.clone());
        } else if mean < 1.0 + lambda {
            sets.negative.push(record.clone());
        } else {
            sets.ambiguous.push(record.clone());
        }
    }
    Ok(Splits {
        lambda,
        per_predicate,
    })
}

/// Which slot stays fixed across a scenario's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedSlot {
    A1,
    A2,
}

/// Scenario group identity: the predicate, the fixed slot, and its value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub predicate: String,
    pub fixed_slot: FixedSlot,
    pub fixed_value: String,
}

/// A k-candidate multiple-choice instance with exactly one positive frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub candidates: Vec<VerbFrame>,
    pub truth_index: usize,
    pub k: usize,
    pub group: GroupKey,
    pub seed: u64,
}

impl Scenario {
    pub fn predicate(&self) -> &str {
        &self.group.predicate
    }
}

fn fixed_and_varying(frame: &VerbFrame, slot: FixedSlot) -> (&str, &str) {
    let a1 = frame.a1.as_deref().expect("records hold complete frames");
    let a2 = frame.a2.as_deref().expect("records hold complete frames");
    match slot {
        FixedSlot::A1 => (a1, a2),
        FixedSlot::A2 => (a2, a1),
    }
}

#[derive(Debug, Default)]
struct Group {
    positives: Vec<VerbFrame>,
    /// Negatives deduplicated by varying argument.
    negatives: Vec<VerbFrame>,
}

fn build_groups(splits: &Splits) -> BTreeMap<GroupKey, Group> {
    let mut groups: BTreeMap<GroupKey, Group> = BTreeMap::new();
    for (predicate, sets) in &splits.per_predicate {
        for slot in [FixedSlot::A1, FixedSlot::A2] {
            for record in &sets.positive {
                let (fixed, _) = fixed_and_varying(&record.frame, slot);
                let key = GroupKey {
                    predicate: predicate.clone(),
                    fixed_slot: slot,
                    fixed_value: fixed.to_string(),
                };
                groups.entry(key).or_default().positives.push(record.frame.clone());
            }
            for record in &sets.negative {
                let (fixed, varying) = fixed_and_varying(&record.frame, slot);
                let key = GroupKey {
                    predicate: predicate.clone(),
                    fixed_slot: slot,
                    fixed_value: fixed.to_string(),
                };
                let group = groups.entry(key).or_default();
                let dup = group
                    .negatives
                    .iter()
                    .any(|n| fixed_and_varying(n, slot).1 == varying);
                if !dup {
                    group.negatives.push(record.frame.clone());
                }
            }
        }
    }
    groups
}

fn eligible_negatives<'a>(group: &'a Group, positive: &VerbFrame, slot: FixedSlot) -> Vec<&'a VerbFrame> {
    let pos_varying = fixed_and_varying(positive, slot).1;
    group
        .negatives
        .iter()
        .filter(|n| fixed_and_varying(n, slot).1 != pos_varying)
        .collect()
}

/// Generate exactly `count` scenarios, visiting feasible groups in
/// lexicographic order round-robin. Positives may be reused across
/// scenarios (never within one); negatives are sampled without
/// replacement within each scenario.
pub fn make_scenarios(
    splits: &Splits,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Scenario>, JudgmentError> {
    if k < 2 {
        return Err(JudgmentError::InvalidScenarioConfig {
            reason: format!("k must be >= 2, got {k}"),
        });
    }
    let groups = build_groups(splits);

    // A (group, positive) choice is feasible when enough distinct-argument
    // negatives remain after excluding the positive's own argument.
    let feasible: Vec<(&GroupKey, &Group, Vec<usize>)> = groups
        .iter()
        .map(|(key, group)| {
            let usable: Vec<usize> = group
                .positives
                .iter()
                .enumerate()
                .filter(|(_, p)| eligible_negatives(group, p, key.fixed_slot).len() >= k - 1)
                .map(|(i, _)| i)
                .collect();
            (key, group, usable)
        })
        .filter(|(_, _, usable)| !usable.is_empty())
        .collect();

    if feasible.is_empty() {
        let max_positives = groups.values().map(|g| g.positives.len()).max().unwrap_or(0);
        let max_negatives = groups.values().map(|g| g.negatives.len()).max().unwrap_or(0);
        return Err(JudgmentError::InsufficientData {
            k,
            max_positives,
            max_negatives,
        });
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut scenarios = Vec::with_capacity(count);
    let mut cursor = 0usize;
    while scenarios.len() < count {
        let (key, group, usable) = &feasible[cursor % feasible.len()];
        cursor += 1;

        let positive = &group.positives[usable[rng.gen_range(0..usable.len())]];
        let mut pool = eligible_negatives(group, positive, key.fixed_slot);
        pool.shuffle(&mut rng);
        let mut candidates: Vec<VerbFrame> =
            pool.into_iter().take(k - 1).cloned().collect();
        candidates.push(positive.clone());
        candidates.shuffle(&mut rng);
        let truth_index = candidates
            .iter()
            .position(|c| c == positive)
            .expect("positive was just inserted");

        scenarios.push(Scenario {
            candidates,
            truth_index,
            k,
            group: (*key).clone(),
            seed,
        });
    }
    Ok(scenarios)
}

/// Write scenarios as JSON Lines.
pub fn save_scenarios(scenarios: &[Scenario], path: &Path) -> Result<(), JudgmentError> {
    let mut buf = Vec::new();
    for s in scenarios {
        serde_json::to_writer(&mut buf, s).expect("scenario serialization cannot fail");
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|source| JudgmentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>, JudgmentError> {
    let file = fs::File::open(path).map_err(|source| JudgmentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| JudgmentError::MalformedFile {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let scenario: Scenario =
            serde_json::from_str(&line).map_err(|e| JudgmentError::MalformedFile {
                line: i + 1,
                reason: e.to_string(),
            })?;
        out.push(scenario);
    }
    Ok(out)
}

/// Write a validation report for generated scenarios, used by the CLI.
pub fn write_scenario_summary<W: Write>(scenarios: &[Scenario], mut w: W) -> io::Result<()> {
    let mut per_predicate: BTreeMap<&str, usize> = BTreeMap::new();
    for s in scenarios {
        *per_predicate.entry(s.predicate()).or_insert(0) += 1;
    }
    writeln!(w, "scenarios: {}", scenarios.len())?;
    for (p, n) in per_predicate {
        writeln!(w, "  {p}: {n}")?;
    }
    Ok(())
}
