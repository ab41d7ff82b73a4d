//! Scorer evaluation: per-predicate accuracy, lambda/k sweeps, and CSV
//! reports.
//!
//! Scenarios are evaluated independently, so evaluation may run in
//! parallel; results are reduced in scenario order and are therefore
//! independent of the worker count.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::judgments::{self, JudgmentError, PlausibilityRecord, Scenario};
use crate::scorers::{self, Scorer, ScorerError};
use crate::util::{fnv1a, mix_seed};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Judgment(#[from] JudgmentError),
}

/// Accuracy of one scorer over one scenario set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scorer: String,
    pub n_scenarios: usize,
    pub successes: usize,
    /// predicate -> (successes, scenarios).
    pub per_predicate: BTreeMap<String, (usize, usize)>,
    pub master_seed: u64,
}

impl EvalReport {
    pub fn overall_accuracy(&self) -> f64 {
        self.successes as f64 / self.n_scenarios as f64
    }

    pub fn predicate_accuracy(&self, predicate: &str) -> Option<f64> {
        self.per_predicate
            .get(predicate)
            .map(|&(s, n)| s as f64 / n as f64)
    }
}

/// Per-scenario seed: a pure function of the master seed and the scenario
/// index, so the random baseline is reproducible under parallelism.
pub fn scenario_seed(master_seed: u64, index: usize) -> u64 {
    mix_seed(master_seed, index as u64)
}

/// Run one scorer over a scenario set. A scenario succeeds when the
/// scorer's argmax lands on the truth index.
pub fn evaluate(
    scorer: &dyn Scorer,
    scenarios: &[Scenario],
    master_seed: u64,
) -> Result<EvalReport, EvalError> {
    if scenarios.is_empty() {
        return Err(EvalError::EmptyScenarioSet);
    }
    let outcomes: Vec<Result<(String, bool), ScorerError>> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, scenario)| {
            let winner = scorers::rank(scorer, &scenario.candidates, scenario_seed(master_seed, i))?;
            Ok((
                scenario.predicate().to_string(),
                winner == scenario.truth_index,
            ))
        })
        .collect();

    let mut per_predicate: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut successes = 0;
    for outcome in outcomes {
        let (predicate, success) = outcome?;
        let entry = per_predicate.entry(predicate).or_insert((0, 0));
        entry.1 += 1;
        if success {
            entry.0 += 1;
            successes += 1;
        }
    }
    Ok(EvalReport {
        scorer: scorer.name().to_string(),
        n_scenarios: scenarios.len(),
        successes,
        per_predicate,
        master_seed,
    })
}

/// Sweep axes and sizing.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub ks: Vec<usize>,
    pub scenarios_per_setting: usize,
    pub master_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            // 0.6 to 2.0 in steps of 0.2.
            lambdas: (3..=10).map(|i| i as f64 / 5.0).collect(),
            ks: vec![4, 6, 10, 16, 24, 32, 40],
            scenarios_per_setting: 500,
            master_seed: 0,
        }
    }
}

/// One CSV row of a sweep (or plain evaluation) report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scorer: String,
    pub lambda: f64,
    pub k: usize,
    /// A predicate name, or `OVERALL` for the summary row.
    pub predicate: String,
    /// `None` for skipped cells.
    pub accuracy: Option<f64>,
    pub n_scenarios: usize,
    pub seed: u64,
    pub skipped: bool,
}

/// Flatten a report into rows: the OVERALL summary first, then one row
/// per predicate.
pub fn report_rows(report: &EvalReport, lambda: f64, k: usize, seed: u64) -> Vec<ReportRow> {
    let mut rows = vec![ReportRow {
        scorer: report.scorer.clone(),
        lambda,
        k,
        predicate: "OVERALL".into(),
        accuracy: Some(report.overall_accuracy()),
        n_scenarios: report.n_scenarios,
        seed,
        skipped: false,
    }];
    for (predicate, &(s, n)) in &report.per_predicate {
        rows.push(ReportRow {
            scorer: report.scorer.clone(),
            lambda,
            k,
            predicate: predicate.clone(),
            accuracy: Some(s as f64 / n as f64),
            n_scenarios: n,
            seed,
            skipped: false,
        });
    }
    rows
}

/// Seed for one (lambda, k) sweep cell; scenario sets are resampled per
/// cell.
pub fn cell_seed(master_seed: u64, lambda: f64, k: usize) -> u64 {
    let tag = fnv1a(format!("cell:{lambda}:{k}").as_bytes());
    mix_seed(master_seed, tag)
}

/// Evaluate every scorer over every (lambda, k) cell. Cells that cannot
/// supply enough scenarios are reported as skipped rows, one per scorer.
pub fn sweep(
    scorers: &[&dyn Scorer],
    records: &[PlausibilityRecord],
    config: &SweepConfig,
) -> Result<Vec<ReportRow>, EvalError> {
    let mut rows = Vec::new();
    for &lambda in &config.lambdas {
        for &k in &config.ks {
            let seed = cell_seed(config.master_seed, lambda, k);
            let splits = judgments::split(records, lambda)?;
            let scenarios =
                match judgments::make_scenarios(&splits, k, config.scenarios_per_setting, seed) {
                    Ok(s) => s,
                    Err(JudgmentError::InsufficientData { .. }) => {
                        for scorer in scorers {
                            rows.push(ReportRow {
                                scorer: scorer.name().to_string(),
                                lambda,
                                k,
                                predicate: "OVERALL".into(),
                                accuracy: None,
                                n_scenarios: 0,
                                seed,
                                skipped: true,
                            });
                        }
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
            for scorer in scorers {
                let report = evaluate(*scorer, &scenarios, seed)?;
                rows.extend(report_rows(&report, lambda, k, seed));
            }
        }
    }
    Ok(rows)
}

/// Write rows as CSV with the fixed column set. Deterministic: identical
/// rows produce identical bytes.
pub fn write_csv<W: Write>(rows: &[ReportRow], mut w: W) -> io::Result<()> {
    writeln!(w, "scorer,lambda,k,predicate,accuracy,n_scenarios,seed,skipped")?;
    for row in rows {
        let accuracy = match row.accuracy {
            Some(a) => format!("{a:.6}"),
            None => String::new(),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.scorer, row.lambda, row.k, row.predicate, accuracy, row.n_scenarios, row.seed, row.skipped
        )?;
    }
    Ok(())
}

/// Run `f` inside a rayon pool with the given thread count (0 = default).
/// Evaluation output must not depend on the count; this exists so callers
/// can bound parallelism.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool construction")
        .install(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::VerbFrame;
    use crate::judgments::split;

    struct Oracle {
        invert: bool,
    }
    impl Scorer for Oracle {
        fn name(&self) -> &str {
            if self.invert {
                "anti-oracle"
            } else {
                "oracle"
            }
        }
        fn score(&self, f: &VerbFrame, _: u64) -> Result<f64, ScorerError> {
            // Truth frames carry the argument "cup".
            let hit = f.a2.as_deref() == Some("cup");
            Ok(match (hit, self.invert) {
                (true, false) | (false, true) => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            })
        }
    }

    fn records() -> Vec<PlausibilityRecord> {
        let mut out = vec![PlausibilityRecord::new(
            VerbFrame::new("pour", "Theme", Some("water"), "Destination", Some("cup")),
            vec![5; 5],
        )];
        for neg in ["scissors", "plate", "sponge", "fork", "knife"] {
            out.push(PlausibilityRecord::new(
                VerbFrame::new("pour", "Theme", Some("water"), "Destination", Some(neg)),
                vec![1; 5],
            ));
        }
        out
    }

    fn scenarios(k: usize, count: usize) -> Vec<Scenario> {
        let splits = split(&records(), 1.0).unwrap();
        judgments::make_scenarios(&splits, k, count, 11).unwrap()
    }

    #[test]
    fn oracle_sandwich() {
        let set = scenarios(4, 50);
        let oracle = evaluate(&Oracle { invert: false }, &set, 0).unwrap();
        assert_eq!(oracle.overall_accuracy(), 1.0);
        let anti = evaluate(&Oracle { invert: true }, &set, 0).unwrap();
        assert_eq!(anti.overall_accuracy(), 0.0);
    }

    #[test]
    fn empty_scenario_set_is_an_error() {
        assert!(matches!(
            evaluate(&Oracle { invert: false }, &[], 0),
            Err(EvalError::EmptyScenarioSet)
        ));
    }

    #[test]
    fn overall_is_scenario_weighted_mean() {
        let set = scenarios(4, 40);
        let report = evaluate(&crate::scorers::RandomScorer::new(3), &set, 5).unwrap();
        let weighted: usize = report.per_predicate.values().map(|&(s, _)| s).sum();
        assert_eq!(weighted, report.successes);
        let total: usize = report.per_predicate.values().map(|&(_, n)| n).sum();
        assert_eq!(total, report.n_scenarios);
    }

    #[test]
    fn evaluation_is_parallelism_invariant() {
        let set = scenarios(4, 60);
        let scorer = crate::scorers::RandomScorer::new(9);
        let a = with_jobs(1, || evaluate(&scorer, &set, 17).unwrap());
        let b = with_jobs(4, || evaluate(&scorer, &set, 17).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_emits_rows_and_flags_skipped_cells() {
        let config = SweepConfig {
            lambdas: vec![1.0],
            // k=20 is infeasible with 5 negatives.
            ks: vec![4, 20],
            scenarios_per_setting: 20,
            master_seed: 1,
        };
        let scorer = crate::scorers::RandomScorer::new(1);
        let rows = sweep(&[&scorer], &records(), &config).unwrap();
        let skipped: Vec<&ReportRow> = rows.iter().filter(|r| r.skipped).collect();
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].k, 20);
        assert!(rows.iter().any(|r| r.k == 4 && r.predicate == "OVERALL" && !r.skipped));
    }

    #[test]
    fn csv_bytes_are_deterministic() {
        let config = SweepConfig {
            lambdas: vec![0.6, 1.0],
            ks: vec![4],
            scenarios_per_setting: 10,
            master_seed: 2,
        };
        let scorer = crate::scorers::RandomScorer::new(2);
        let mut a = Vec::new();
        write_csv(&sweep(&[&scorer], &records(), &config).unwrap(), &mut a).unwrap();
        let mut b = Vec::new();
        write_csv(&sweep(&[&scorer], &records(), &config).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        assert!(String::from_utf8(a)
            .unwrap()
            .starts_with("scorer,lambda,k,predicate,accuracy,n_scenarios,seed,skipped\n"));
    }
}
