//! `framefill` command line: corpus ingestion, LM training, instruction
//! completion, scenario generation, and scorer evaluation.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use framefill_core::corpus::{self, CooccurStats, CorpusFormat, Document};
use framefill_core::eval::{self, SweepConfig};
use framefill_core::frames::{Instruction, Linearization, RoleLexicon};
use framefill_core::judgments::{self, PlausibilityRecord};
use framefill_core::lm::{self, NGramModel, TrainingConfig};
use framefill_core::pipeline::{self, ActionTemplateSet, ObjectInventory};
use framefill_core::scorers::{
    CooccurScorer, EmbeddingScorer, EmbeddingTable, LmScorer, RandomScorer, RelatednessScorer,
    RelatednessTable, Scorer,
};
use framefill_core::util::mix_seed;

const LEXICON_ENV: &str = "FRAMEFILL_LEXICON";

#[derive(Parser)]
#[command(name = "framefill", version, about = "Complete verb-frame instructions and evaluate plausibility scorers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest corpus files and write merged co-occurrence statistics.
    Ingest {
        /// Corpus files to ingest.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Corpus layout: lines | recipe.
        #[arg(long, default_value = "lines")]
        format: CorpusFormat,
        /// Output TSV path for the statistics.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a backoff n-gram language model.
    TrainLm {
        /// Corpus files; multiple files train on the concatenation.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, default_value = "lines")]
        format: CorpusFormat,
        /// N-gram order.
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Linearization mode: frame | sentence.
        #[arg(long, default_value = "sentence")]
        mode: Linearization,
        /// Absolute discount.
        #[arg(long, default_value_t = 0.1)]
        discount: f64,
        /// Lexicon TSV (required for frame mode; falls back to FRAMEFILL_LEXICON).
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Output model artifact path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Complete an instruction against an object inventory.
    Complete {
        /// The instruction text.
        instruction: String,
        /// Inventory JSON file.
        #[arg(long)]
        inventory: PathBuf,
        /// Scorer spec, e.g. lm:model.json, cooccur:stats.tsv, random.
        #[arg(long)]
        scorer: String,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Also emit a waypoint plan (requires --templates).
        #[arg(long, requires = "templates")]
        plan: bool,
        /// Action template TSV used by --plan.
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Master seed (only affects the random scorer).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Split judgments and generate k-candidate scenarios.
    MakeScenarios {
        /// Judgment records (JSON Lines).
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output scenarios (JSON Lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate scorers at one (lambda, k) setting and write a CSV report.
    Evaluate {
        #[arg(long)]
        judgments: PathBuf,
        /// Scorer specs; repeatable.
        #[arg(long = "scorer", required = true)]
        scorers: Vec<String>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Evaluation threads (0 = library default). Output is invariant
        /// to this value.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep lambda and k, writing a long-format CSV report.
    Sweep {
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long = "scorer", required = true)]
        scorers: Vec<String>,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        /// Comma-separated k values.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            let picked = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            eprintln!("no --seed given; picked seed {picked}");
            picked
        }
    }
}

/// Lexicon resolution: explicit flag, then FRAMEFILL_LEXICON, then the
/// built-in eleven-verb lexicon.
fn resolve_lexicon(flag: &Option<PathBuf>, required_explicit: bool) -> Result<RoleLexicon> {
    if let Some(path) = flag {
        return RoleLexicon::load(path).map_err(Into::into);
    }
    if let Ok(path) = std::env::var(LEXICON_ENV) {
        return RoleLexicon::load(Path::new(&path)).map_err(Into::into);
    }
    if required_explicit {
        bail!("frame mode requires a lexicon: pass --lexicon or set {LEXICON_ENV}");
    }
    Ok(RoleLexicon::builtin())
}

fn load_corpus(paths: &[PathBuf], format: CorpusFormat) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for path in paths {
        let doc = corpus::ingest(path, format)?;
        if doc.is_empty() {
            eprintln!("warning: no sentences extracted from {}", path.display());
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn load_judgments(path: &Path) -> Result<Vec<PlausibilityRecord>> {
    let records = judgments::load_records(path)?;
    for warning in judgments::validate_records(&records)? {
        eprintln!("warning: {warning}");
    }
    Ok(records)
}

/// Build a scorer from a `name:artifact-path` spec.
fn build_scorer(spec: &str, lexicon: &RoleLexicon, master_seed: u64) -> Result<Box<dyn Scorer>> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let need_path = || {
        arg.map(PathBuf::from)
            .ok_or_else(|| anyhow!("scorer spec `{spec}` needs an artifact path (name:path)"))
    };
    match name {
        "lm" => {
            let model = NGramModel::load(&need_path()?)?;
            let mode = model.mode();
            Ok(Box::new(LmScorer::new(model, mode, lexicon.clone())?))
        }
        "cooccur" => Ok(Box::new(CooccurScorer::new(CooccurStats::load(&need_path()?)?))),
        "embedding" => Ok(Box::new(EmbeddingScorer::new(EmbeddingTable::load(&need_path()?)?))),
        "relatedness" => Ok(Box::new(RelatednessScorer::new(RelatednessTable::load(
            &need_path()?,
        )?))),
        "random" => {
            let seed = match arg {
                Some(a) => a.parse().context("random scorer seed must be an integer")?,
                None => mix_seed(master_seed, 0x72616e646f6d),
            };
            Ok(Box::new(RandomScorer::new(seed)))
        }
        other => bail!("unknown scorer `{other}` (expected lm|cooccur|embedding|relatedness|random)"),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { paths, format, out } => {
            eprintln!("ingest: files={paths:?} format={format} out={}", out.display());
            let docs = load_corpus(&paths, format)?;
            let stats = corpus::build_cooccur(docs.iter());
            let mut buf = Vec::new();
            stats.write_tsv(&mut buf)?;
            write_file(&out, &buf)?;
            let sentences: usize = docs.iter().map(|d| d.sentences.len()).sum();
            eprintln!("ingested {} files, {sentences} sentences, {} tokens", paths.len(), stats.total_unigrams());
        }
        Command::TrainLm {
            paths,
            format,
            order,
            mode,
            discount,
            lexicon,
            out,
        } => {
            eprintln!(
                "train-lm: files={paths:?} format={format} order={order} mode={mode} discount={discount} out={}",
                out.display()
            );
            let lex = resolve_lexicon(&lexicon, mode == Linearization::Frame)?;
            let docs = load_corpus(&paths, format)?;
            let config = TrainingConfig {
                order,
                mode,
                discount,
                ..TrainingConfig::default()
            };
            let model = lm::train(&docs, config, &lex)?;
            write_file(&out, &model.to_bytes())?;
            eprintln!("trained {mode} model, vocabulary size {}", model.vocabulary().len());
        }
        Command::Complete {
            instruction,
            inventory,
            scorer,
            lexicon,
            plan,
            templates,
            seed,
        } => {
            let seed = resolve_seed(seed);
            eprintln!(
                "complete: instruction={instruction:?} inventory={} scorer={scorer} seed={seed}",
                inventory.display()
            );
            let lex = resolve_lexicon(&lexicon, false)?;
            let inv = ObjectInventory::load(&inventory)?;
            let scorer = build_scorer(&scorer, &lex, seed)?;
            let instr = Instruction::from_text(&instruction);
            let frame = pipeline::complete(&instr, &inv, scorer.as_ref(), &lex)?;
            let output = if plan {
                let tpl = templates.expect("clap enforces --templates with --plan");
                let set = ActionTemplateSet::load(&tpl)?;
                serde_json::to_value(pipeline::plan(&frame, &inv, &set)?)?
            } else {
                serde_json::json!({ "frame": frame })
            };
            println!("{output}");
        }
        Command::MakeScenarios {
            judgments: judgments_path,
            lambda,
            k,
            count,
            seed,
            out,
        } => {
            let seed = resolve_seed(seed);
            eprintln!(
                "make-scenarios: judgments={} lambda={lambda} k={k} count={count} seed={seed} out={}",
                judgments_path.display(),
                out.display()
            );
            let records = load_judgments(&judgments_path)?;
            let splits = judgments::split(&records, lambda)?;
            let scenarios = judgments::make_scenarios(&splits, k, count, seed)?;
            judgments::save_scenarios(&scenarios, &out)?;
            let mut summary = Vec::new();
            judgments::write_scenario_summary(&scenarios, &mut summary)?;
            eprint!("{}", String::from_utf8_lossy(&summary));
        }
        Command::Evaluate {
            judgments: judgments_path,
            scorers,
            lambda,
            k,
            count,
            seed,
            lexicon,
            jobs,
            out,
        } => {
            let seed = resolve_seed(seed);
            eprintln!(
                "evaluate: judgments={} scorers={scorers:?} lambda={lambda} k={k} count={count} seed={seed} jobs={jobs} out={}",
                judgments_path.display(),
                out.display()
            );
            let lex = resolve_lexicon(&lexicon, false)?;
            let records = load_judgments(&judgments_path)?;
            let built: Vec<Box<dyn Scorer>> = scorers
                .iter()
                .map(|s| build_scorer(s, &lex, seed))
                .collect::<Result<_>>()?;
            let refs: Vec<&dyn Scorer> = built.iter().map(Box::as_ref).collect();
            let config = SweepConfig {
                lambdas: vec![lambda],
                ks: vec![k],
                scenarios_per_setting: count,
                master_seed: seed,
            };
            let rows = eval::with_jobs(jobs, || eval::sweep(&refs, &records, &config))?;
            let mut buf = Vec::new();
            eval::write_csv(&rows, &mut buf)?;
            write_file(&out, &buf)?;
            for row in rows.iter().filter(|r| r.predicate == "OVERALL") {
                match row.accuracy {
                    Some(a) => eprintln!("{}: overall accuracy {a:.4} over {} scenarios", row.scorer, row.n_scenarios),
                    None => eprintln!("{}: skipped (insufficient data)", row.scorer),
                }
            }
        }
        Command::Sweep {
            judgments: judgments_path,
            scorers,
            lambdas,
            ks,
            count,
            seed,
            lexicon,
            jobs,
            out,
        } => {
            let seed = resolve_seed(seed);
            let default = SweepConfig::default();
            let config = SweepConfig {
                lambdas: lambdas.unwrap_or(default.lambdas),
                ks: ks.unwrap_or(default.ks),
                scenarios_per_setting: count,
                master_seed: seed,
            };
            eprintln!(
                "sweep: judgments={} scorers={scorers:?} lambdas={:?} ks={:?} count={count} seed={seed} jobs={jobs} out={}",
                judgments_path.display(),
                config.lambdas,
                config.ks,
                out.display()
            );
            let lex = resolve_lexicon(&lexicon, false)?;
            let records = load_judgments(&judgments_path)?;
            let built: Vec<Box<dyn Scorer>> = scorers
                .iter()
                .map(|s| build_scorer(s, &lex, seed))
                .collect::<Result<_>>()?;
            let refs: Vec<&dyn Scorer> = built.iter().map(Box::as_ref).collect();
            let rows = eval::with_jobs(jobs, || eval::sweep(&refs, &records, &config))?;
            let mut buf = Vec::new();
            eval::write_csv(&rows, &mut buf)?;
            write_file(&out, &buf)?;
            let skipped = rows.iter().filter(|r| r.skipped).count();
            eprintln!("wrote {} rows ({skipped} skipped cells)", rows.len());
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
