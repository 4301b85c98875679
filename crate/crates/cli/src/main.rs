//! `bugrank`: ingest a bug corpus, build and analyze the co-affection graph,
//! train and evaluate severity models, and compare two models bug by bug.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use bugrank::features::FieldSpec;
use bugrank::models::ModelKind;
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig, Settings};
use error::CliError;

#[derive(Parser)]
#[command(name = "bugrank", version, about = "Bug severity ranking on the bug-bug co-affection graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus file (JSON Lines)
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Training fractions, comma separated (e.g. 0.7,0.05)
    #[arg(long, value_delimiter = ',')]
    fraction: Vec<f64>,
    /// Models, comma separated: MLP, GCN, GAT, SAGE
    #[arg(long, value_delimiter = ',')]
    model: Vec<ModelKind>,
    /// Text fields, comma separated: description, comments, both
    #[arg(long, value_delimiter = ',')]
    fields: Vec<FieldSpec>,
    /// Parallel sweep cells
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn settings(self) -> Result<Settings, CliError> {
        let config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Settings::resolve(
            config,
            Overrides {
                corpus: self.corpus,
                out: self.out,
                seed: self.seed,
                fractions: self.fraction,
                models: self.model,
                fields: self.fields,
                jobs: self.jobs,
            },
        )
    }

    fn corpus(&self) -> Result<PathBuf, CliError> {
        if let Some(c) = &self.corpus {
            return Ok(c.clone());
        }
        let config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        config
            .corpus
            .ok_or_else(|| CliError::user("no corpus given (--corpus or \"corpus\" in the config)"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus and print its statistics
    Ingest {
        #[command(flatten)]
        run: RunArgs,
        /// Recompute heat from attributes and report disagreements
        #[arg(long)]
        validate_heat: bool,
    },
    /// Build the bug-bug graph and write it as an edge list
    Graph {
        #[command(flatten)]
        run: RunArgs,
        /// Ignore bug-package links added after this instant (RFC 3339); defaults to the split's cutoff
        #[arg(long)]
        cutoff: Option<DateTime<Utc>>,
    },
    /// Correlate heat with degree, clustering and PageRank on the hottest and coldest bugs
    Analyze {
        #[command(flatten)]
        run: RunArgs,
        /// Edge list written by `graph`
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 100)]
        k: usize,
    },
    /// Run the training-fraction sweep and write checkpoints, predictions and reports
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-evaluate saved checkpoints on the test bugs
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare two trained models bug by bug on the test group
    ErrorAnalysis {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "GAT")]
        model_a: ModelKind,
        #[arg(long, default_value = "MLP")]
        model_b: ModelKind,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { run, validate_heat } => {
            let corpus = run.corpus()?;
            commands::ingest(&corpus, validate_heat, run.out.as_deref())
        }
        Command::Graph { run, cutoff } => {
            let corpus = run.corpus()?;
            let out = run
                .out
                .clone()
                .ok_or_else(|| CliError::user("graph needs --out <edge list path>"))?;
            let cutoff = match cutoff {
                Some(c) => c,
                None => match &run.config {
                    Some(p) => RunConfig::load(p)?.split.unwrap_or_default().graph_cutoff(),
                    None => bugrank::experiment::SplitSpec::default().graph_cutoff(),
                },
            };
            commands::graph(&corpus, cutoff, &out)
        }
        Command::Analyze { run, graph, k } => {
            let corpus = run.corpus()?;
            commands::analyze(&graph, &corpus, k, run.out.as_deref())
        }
        Command::Train { run } => commands::train(&run.settings()?),
        Command::Evaluate { run } => commands::evaluate_checkpoints(&run.settings()?),
        Command::ErrorAnalysis { run, model_a, model_b } => {
            commands::error_analysis_cmd(&run.settings()?, model_a, model_b)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
