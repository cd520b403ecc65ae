//! The `argrank` command line.
//!
//! Every subcommand accepts `--seed`, `--config <file>` and `--out <dir>`.
//! Any flag may also be given in the config file as `key = value` (flags
//! win). Relative input paths resolve against `$ARGRANK_DATA_ROOT` when it
//! is set.

mod commands;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, Parser, Subcommand};

use crate::config::{normalize_key, parse_config_file, Settings, DATA_ROOT_VAR};
use crate::{formats, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "argrank", version, about = "Pairwise convincingness ranking toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Seed for every random choice.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key = value` file with defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusFiles {
    #[arg(long)]
    pub evidence: Option<PathBuf>,
    #[arg(long)]
    pub topics: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelFiles {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub dropout_rate: Option<f32>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate corpus files and write normalized copies plus a summary.
    Ingest {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        corpus: CorpusFiles,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Build pairs (at most this many per topic) when no pairs file is given.
        #[arg(long)]
        pair_budget: Option<usize>,
    },
    /// Crowd-annotation quality control and label aggregation.
    Audit {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Pairs file; enables the transitivity audit.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Reject labelers with fewer real pairs (default 20).
        #[arg(long)]
        min_pairs: Option<usize>,
        /// Reject labelers whose average kappa is below this (default 0.1).
        #[arg(long)]
        min_kappa: Option<f64>,
        /// Reject labelers whose hidden-question precision is below this (default 0.55).
        #[arg(long)]
        min_precision: Option<f64>,
        /// Shared pairs needed for a pairwise kappa (default 20).
        #[arg(long)]
        min_shared: Option<usize>,
        /// Counterparts needed for an average kappa (default 10).
        #[arg(long)]
        min_counterparts: Option<usize>,
        /// Valid annotations a pair needs (default 7).
        #[arg(long)]
        min_annotations: Option<usize>,
        /// Vote share the winning side needs (default 0.6).
        #[arg(long)]
        majority: Option<f64>,
    },
    /// Train the ranker on labeled pairs.
    Train {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        corpus: CorpusFiles,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        train: TrainFlags,
        /// LSTM width per direction (default 128).
        #[arg(long)]
        hidden: Option<usize>,
        /// Attention heads (default 100).
        #[arg(long)]
        heads: Option<usize>,
        /// Tokens kept per text (default 60).
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Pointwise scores for every evidence, and pair probabilities.
    Score {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        corpus: CorpusFiles,
        #[command(flatten)]
        model: ModelFiles,
    },
    /// Accuracy, baselines, correlations, stance grid, length robustness.
    Eval {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        corpus: CorpusFiles,
        #[command(flatten)]
        model: ModelFiles,
        /// Gold labels of the evaluated pairs.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Training labels (most-frequent baseline and stance grid).
        #[arg(long)]
        train_labels: Option<PathBuf>,
        /// External per-evidence scores used as a baseline.
        #[arg(long)]
        detection_scores: Option<PathBuf>,
        /// Gold per-evidence scores for rank correlations.
        #[arg(long)]
        gold_scores: Option<PathBuf>,
        /// Pairs beyond the 30% length-ratio limit, for the robustness check.
        #[arg(long)]
        unbalanced_pairs: Option<PathBuf>,
        /// Gold labels of the unbalanced pairs.
        #[arg(long)]
        unbalanced_labels: Option<PathBuf>,
        /// Evaluate a single baseline: length, most-frequent or detection.
        #[arg(long)]
        baseline: Option<String>,
        /// Training pairs per stance subset; enables the stance grid.
        #[arg(long)]
        grid_train_size: Option<usize>,
        /// Test pairs per stance subset.
        #[arg(long)]
        grid_test_size: Option<usize>,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Per-reason error analysis and word-distribution differences.
    Analyze {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        corpus: CorpusFiles,
        #[command(flatten)]
        model: ModelFiles,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        reasons: Option<PathBuf>,
        /// Stop-word list; defaults to the bundled English list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Words listed per side (default 20).
        #[arg(long)]
        top_n: Option<usize>,
    },
}

/// Builds the effective settings of the chosen subcommand: config file
/// values overlaid by flags given on the command line.
fn settings(name: &str, matches: &ArgMatches) -> Result<Settings> {
    let known: Vec<String> = Cli::command()
        .find_subcommand(name)
        .expect("subcommand exists")
        .get_arguments()
        .map(|a| a.get_id().to_string())
        .filter(|id| id != "config" && id != "help")
        .collect();
    let known: Vec<&str> = known.iter().map(String::as_str).collect();
    let mut flags = BTreeMap::new();
    for id in matches.ids() {
        let id = id.as_str();
        // flattened structs also appear as argument groups
        if !known.contains(&id) || matches.value_source(id) != Some(ValueSource::CommandLine) {
            continue;
        }
        if let Ok(Some(mut raw)) = matches.try_get_raw(id) {
            let value = raw.next().expect("one value").to_string_lossy().into_owned();
            flags.insert(id.to_string(), value);
        }
    }
    let file = match matches.try_get_one::<PathBuf>("config").ok().flatten() {
        Some(path) => {
            let text = formats::read_to_string(path)?;
            parse_config_file(&text, &path.display().to_string())?
                .into_iter()
                .map(|(k, v)| (normalize_key(&k), v))
                .collect()
        }
        None => BTreeMap::new(),
    };
    let data_root = std::env::var_os(DATA_ROOT_VAR)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    Settings::new(name, file, flags, &known, data_root)
}

/// Runs the tool and returns the process exit code. Messages go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    match settings(name, sub).and_then(|s| commands::dispatch(&s)) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Caps long id lists in error messages.
pub(crate) fn id_list(ids: &[String]) -> String {
    const SHOWN: usize = 20;
    let mut out = ids.iter().take(SHOWN).map(String::as_str).collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        out.push_str(&format!(" and {} more", ids.len() - SHOWN));
    }
    out
}

pub(crate) fn uncovered(what: &str, ids: Vec<String>) -> Result<()> {
    if ids.is_empty() {
        return Ok(());
    }
    Err(Error::Schema(format!("{} {what}: {}", ids.len(), id_list(&ids))))
}
