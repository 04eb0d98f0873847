//! `fauxaudit generate|train|audit|evaluate`.

mod commands;
mod config;
mod ingest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_audit, cmd_evaluate, cmd_generate, cmd_train, make_split, read_scores, twin_path, AuditSummary,
    EvaluateReport, GroundTruth, ModelMetrics, ScoreTable, Split,
};
pub use config::{
    load, resolve, AuditSection, EvaluateSection, GenerateSection, Overrides, Resolved, RowSubset, RunConfig,
    SplitFractions, TrainSection,
};
pub use ingest::{ingest, Binarize, IngestConfig, Predicate};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "fauxaudit", version, about = "Gradient-alignment individual fairness audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (and its unbiased twin) or ingest a CSV.
    Generate(CommonArgs),
    /// Train target, auxiliary, linear, fair and reference models.
    Train(CommonArgs),
    /// Score held-out rows with the selected fairness tests.
    Audit(CommonArgs),
    /// Average precision, PR curves, transparency NDCG, fair-vs-unfair summary.
    Evaluate(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated tests, e.g. `faux,faux_ng,fta`.
    #[arg(long)]
    pub tests: Option<String>,
    /// Train (train) or audit (audit) the adversarially debiased model.
    #[arg(long)]
    pub fair: bool,
    /// Render PR curves as SVG (evaluate).
    #[arg(long)]
    pub svg: bool,
}

/// Runs one command and returns a one-line summary for the terminal.
pub fn run(cli: Cli) -> Result<String> {
    let (name, args) = match &cli.command {
        Command::Generate(a) => ("generate", a),
        Command::Train(a) => ("train", a),
        Command::Audit(a) => ("audit", a),
        Command::Evaluate(a) => ("evaluate", a),
    };
    let overrides = Overrides {
        out: args.out.clone(),
        seed: args.seed,
        tests: args.tests.clone(),
        fair: args.fair && name == "train",
    };
    let r = load(&args.config, &overrides)?;
    Ok(match cli.command {
        Command::Generate(_) => {
            let files = cmd_generate(&r)?;
            format!("wrote {}", files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))
        }
        Command::Train(_) => {
            let m = cmd_train(&r)?;
            let parts: Vec<String> = m
                .iter()
                .map(|(k, v)| format!("{k}: val acc {:.3}", v.val_accuracy))
                .collect();
            format!("trained {}", parts.join("; "))
        }
        Command::Audit(ref a) => {
            let s = cmd_audit(&r, a.fair)?;
            let flagged: Vec<String> = s.flagged.iter().map(|(t, n)| format!("{t}={n}")).collect();
            format!("audited {} rows of {}; flagged {}", s.rows, s.model, flagged.join(" "))
        }
        Command::Evaluate(ref a) => {
            let e = cmd_evaluate(&r, a.svg)?;
            let aps: Vec<String> = e
                .average_precision
                .iter()
                .map(|(t, ap)| match ap {
                    Some(v) => format!("{t}={v:.3}"),
                    None => format!("{t}=n/a"),
                })
                .collect();
            format!("AP {}", aps.join(" "))
        }
    })
}
