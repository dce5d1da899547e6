//! Command-line front end: `predict`, `evaluate` and `stats`.
//!
//! Exit codes: 0 on success, 1 for I/O or parse failures, 2 for domain errors
//! (cold-start user, unknown backend, inconsistent arguments).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::dataset::{self, DatasetError, ItemId, RatingRange, UserId};
use crate::evaluation::{self, EvaluationConfig, EvaluationError};
use crate::prediction::{self, PredictionError};
use crate::ranking::{backend_by_name, RankOptions, RankingBackend, UnknownBackend};

#[derive(Debug, Parser)]
#[command(
    name = "recsys-ir",
    version,
    about = "Rating prediction by ranking similar users"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predict one user's rating of one item; prints
    /// `user,item,raw,rounded,candidates,fallback`.
    Predict(PredictArgs),
    /// Run the leave-n-out evaluation over paired train/test files.
    Evaluate(EvaluateArgs),
    /// Print matrix statistics of a rating file.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, default_value_t = 1)]
    pub rating_min: u8,
    #[arg(long, default_value_t = 5)]
    pub rating_max: u8,
    /// Override the number of users (defaults to the largest observed id).
    #[arg(long)]
    pub num_users: Option<usize>,
    /// Override the number of items (defaults to the largest observed id).
    #[arg(long)]
    pub num_items: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub user: u32,
    #[arg(long)]
    pub item: u32,
    #[arg(long, default_value = "vsm")]
    pub backend: String,
    /// Keep zero-similarity candidates at the tail of the ranking.
    #[arg(long)]
    pub keep_zero_similarity: bool,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Training file; repeat once per split.
    #[arg(long, required = true)]
    pub train: Vec<PathBuf>,
    /// Test file paired with the `--train` at the same position.
    #[arg(long, required = true)]
    pub test: Vec<PathBuf>,
    #[arg(long, default_value = "vsm")]
    pub backend: String,
    /// Report CSV destination.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Per-prediction log CSV. With several splits the split name is
    /// inserted before the extension (`log.csv` becomes `log.u1.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub keep_zero_similarity: bool,
    /// Score the community baseline with its unrounded mean.
    #[arg(long)]
    pub no_round_community: bool,
    /// Worker threads (default: all cores). Never changes the results.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Fill the wall_time_s column of the report CSV.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Write per-item rater counts as `item,raters` CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Output {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    UnknownBackend(#[from] UnknownBackend),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Dataset(DatasetError::InvalidRange { .. }) => 2,
            CliError::Dataset(_) | CliError::Output { .. } | CliError::Io(_) => 1,
            CliError::Evaluation(EvaluationError::ThreadPool(_)) => 1,
            CliError::UnknownBackend(_)
            | CliError::Prediction(_)
            | CliError::Evaluation(_)
            | CliError::Usage(_) => 2,
        }
    }
}

impl DataArgs {
    fn range(&self) -> Result<RatingRange, CliError> {
        Ok(RatingRange::new(self.rating_min, self.rating_max)?)
    }

    fn dims(&self) -> Option<(usize, usize)> {
        match (self.num_users, self.num_items) {
            (None, None) => None,
            (users, items) => Some((users.unwrap_or(0), items.unwrap_or(0))),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })
}

/// Runs a parsed command, writing results to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    match &cli.command {
        Command::Predict(args) => run_predict(args, out),
        Command::Evaluate(args) => run_evaluate(args, out),
        Command::Stats(args) => run_stats(args, out),
    }
}

pub fn run_predict<W: Write>(args: &PredictArgs, out: &mut W) -> Result<(), CliError> {
    let backend = backend_by_name(&args.backend)?;
    let range = args.data.range()?;
    let train = dataset::read_ratings_file(&args.train, range, args.data.dims())?;
    let record = prediction::predict(
        &train,
        UserId(args.user),
        ItemId(args.item),
        backend.as_ref(),
        RankOptions {
            keep_zero_similarity: args.keep_zero_similarity,
        },
    )?;
    writeln!(
        out,
        "{},{},{},{},{},{}",
        record.user,
        record.item,
        evaluation::fixed4(record.raw),
        record.rounded,
        record.candidate_count,
        record.fallback
    )?;
    Ok(())
}

fn log_path(base: &Path, split: &str, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{split}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{split}"),
    };
    base.with_file_name(name)
}

pub fn run_evaluate<W: Write>(args: &EvaluateArgs, out: &mut W) -> Result<(), CliError> {
    let backend: Box<dyn RankingBackend> = backend_by_name(&args.backend)?;
    if args.train.len() != args.test.len() {
        return Err(CliError::Usage(format!(
            "--train given {} times but --test {} times",
            args.train.len(),
            args.test.len()
        )));
    }
    let range = args.data.range()?;
    let splits = args
        .train
        .iter()
        .zip(&args.test)
        .map(|(train, test)| dataset::read_split_files(train, test, range, args.data.dims()))
        .collect::<Result<Vec<_>, _>>()?;

    let config = EvaluationConfig {
        rank: RankOptions {
            keep_zero_similarity: args.keep_zero_similarity,
        },
        round_community: !args.no_round_community,
        jobs: args.jobs.unwrap_or(0),
    };
    let summary = evaluation::evaluate_all(&splits, backend.as_ref(), &config)?;

    if let Some(path) = &args.output {
        let mut w = create(path)?;
        evaluation::write_report_csv(&mut w, &summary, args.timing)?;
        w.flush()?;
    }
    if let Some(base) = &args.log {
        let many = summary.reports.len() > 1;
        for (report, rows) in summary.reports.iter().zip(&summary.logs) {
            let mut w = create(&log_path(base, &report.split, many))?;
            evaluation::write_log_csv(&mut w, rows)?;
            w.flush()?;
        }
    }
    evaluation::write_table(out, &summary)?;
    Ok(())
}

pub fn run_stats<W: Write>(args: &StatsArgs, out: &mut W) -> Result<(), CliError> {
    let range = args.data.range()?;
    let matrix = dataset::read_ratings_file(&args.train, range, args.data.dims())?;
    let s = dataset::stats(&matrix);
    writeln!(out, "users,items,entries,density")?;
    writeln!(
        out,
        "{},{},{},{:.6}",
        s.users, s.items, s.entries, s.density
    )?;
    if let Some(path) = &args.output {
        let mut w = create(path)?;
        writeln!(w, "item,raters")?;
        for (idx, count) in s.item_rater_counts.iter().enumerate() {
            writeln!(w, "{},{}", idx + 1, count)?;
        }
        w.flush()?;
    }
    Ok(())
}
