//! `ruag`: generate, split, train, evaluate, mine, probe and guard.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ruag_core::{Label, Split};

#[derive(Parser, Debug)]
#[command(name = "ruag", version, about = "Grammar-driven tooling for the \"are you a robot?\" intent")]
pub struct Cli {
    /// Root seed; every stage derives its own sub-seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample labeled utterances from a grammar.
    Gen(GenArgs),
    /// Partition a grammar into train/val/test sub-grammars.
    Split(SplitArgs),
    /// Train a classifier on the train split of a dataset.
    Train(TrainArgs),
    /// Score a classifier on one or more dataset splits.
    Eval(EvalArgs),
    /// Mine candidate negatives from unlabeled corpora.
    Mine(MineArgs),
    /// Decide whether to disclose, one JSON line per utterance.
    Guard(GuardArgs),
    /// Measure recall on a set of distinct positive phrasings.
    Probe(ProbeArgs),
    /// Convert a CSV export into the dataset TSV format.
    Import(ImportArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Grammar file, or `shipped:<name>` for a bundled grammar.
    #[arg(long)]
    pub grammar: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value = "p", value_parser = parse_label)]
    pub label: Label,
    #[arg(long, default_value = "none", value_parser = parse_split)]
    pub split: Split,
    /// Keep duplicate strings.
    #[arg(long)]
    pub no_dedup: bool,
    #[arg(long)]
    pub max_attempts: Option<usize>,
    /// Output TSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    pub grammar: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Probability mass duplicated into every split.
    #[arg(long)]
    pub p: Option<f64>,
    /// Train, val and test fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long)]
    pub min_alternatives: Option<usize>,
    /// Rebuild the sub-grammars from an existing manifest instead of partitioning.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Also sample this many rows per split (train,val,test) into dataset.tsv.
    #[arg(long, value_delimiter = ',')]
    pub emit: Option<Vec<usize>>,
    #[arg(long, default_value = "p", value_parser = parse_label)]
    pub label: Label,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Bowlr,
    Ngram,
    Ir,
    Random,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accept rows still marked needs_review.
    #[arg(long)]
    pub reviewed: bool,
}

#[derive(Args, Debug)]
pub struct ClassifierArgs {
    /// Saved model file.
    #[arg(long, conflicts_with = "recognizer")]
    pub model: Option<PathBuf>,
    /// Use the grammar recognizer instead of a saved model.
    #[arg(long)]
    pub recognizer: bool,
    #[arg(long)]
    pub pos_grammar: Option<String>,
    #[arg(long)]
    pub aic_grammar: Option<String>,
    /// Match only the full utterance.
    #[arg(long)]
    pub no_heuristics: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Splits to report, comma separated.
    #[arg(long, default_value = "test", value_delimiter = ',', value_parser = parse_split)]
    pub split: Vec<Split>,
    /// Write the report TSV here as well as to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-utterance JSON lines with a confusion-matrix summary.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    #[arg(long)]
    pub reviewed: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Method {
    Random,
    Tfidf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Agg {
    Max,
    Mean,
    Sum,
}

#[derive(Args, Debug)]
pub struct MineArgs {
    /// One utterance per line; repeat for several corpora.
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,
    /// Dataset whose POS rows are the positives.
    #[arg(long)]
    pub positives: Option<PathBuf>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "tfidf")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "max")]
    pub aggregation: Agg,
    #[arg(long, default_value = "none", value_parser = parse_split)]
    pub split: Split,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GuardArgs {
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Utterance to check; repeatable. Reads stdin lines when absent.
    #[arg(long)]
    pub text: Vec<String>,
    /// key=value disclosure config file.
    #[arg(long, conflicts_with = "preset")]
    pub guard_config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Prepared probes, one per line.
    #[arg(long, conflicts_with_all = ["crowd", "n"])]
    pub probes: Option<PathBuf>,
    /// Crowd-sourced positives, one per line; half the probes come from here.
    #[arg(long)]
    pub crowd: Option<PathBuf>,
    /// Grammar supplying the other half.
    #[arg(long)]
    pub grammar: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Per-probe verdict TSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImportArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// Split for rows without a split column.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<Split>,
    #[arg(long, default_value = "crowd")]
    pub source: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_label(s: &str) -> Result<Label, String> {
    s.parse().map_err(|e: ruag_core::label::ParseLabelError| e.to_string())
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse().map_err(|e: ruag_core::label::ParseSplitError| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
