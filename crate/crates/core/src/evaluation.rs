//! Leave-n-out evaluation: RMSE of the ranking predictor and of the
//! per-item community average over held-out ratings.
//!
//! Test ratings are predicted in parallel, but results are collected in test
//! order and reduced sequentially, so reports do not depend on the number of
//! worker threads.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{ItemId, Rating, RatingMatrix, SplitPair, UserId};
use crate::prediction::{global_mean, predict, ExactMean, Fallback, PredictionError};
use crate::ranking::{RankOptions, RankingBackend};
use crate::summation::CompensatedSum;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("rmse needs equally sized non-empty inputs (got {predictions} predictions, {actuals} actuals)")]
    LengthMismatch { predictions: usize, actuals: usize },
    #[error("split {split}: user {user}, item {item}: {source}")]
    Prediction {
        split: String,
        user: UserId,
        item: ItemId,
        #[source]
        source: PredictionError,
    },
    #[error("no splits to evaluate")]
    NoSplits,
    #[error("split {0} has an empty training matrix")]
    EmptyTrain(String),
    #[error("failed to start worker pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

/// Root mean squared error between predictions and actual ratings.
pub fn rmse<P, A>(predictions: &[P], actuals: &[A]) -> Result<f64, EvaluationError>
where
    P: Copy + Into<f64>,
    A: Copy + Into<f64>,
{
    if predictions.is_empty() || predictions.len() != actuals.len() {
        return Err(EvaluationError::LengthMismatch {
            predictions: predictions.len(),
            actuals: actuals.len(),
        });
    }
    let squared: CompensatedSum = predictions
        .iter()
        .zip(actuals)
        .map(|(&p, &a)| {
            let diff = a.into() - p.into();
            diff * diff
        })
        .collect();
    Ok((squared.total() / predictions.len() as f64).sqrt())
}

/// Mean training rating of `item`, or of the whole matrix when the item has
/// no ratings. `None` only for an empty matrix.
pub fn community_mean(train: &RatingMatrix, item: ItemId) -> Option<ExactMean> {
    let raters = train.item_ratings(item);
    if raters.is_empty() {
        return global_mean(train);
    }
    Some(ExactMean {
        numerator: raters.iter().map(|&(_, r)| u64::from(r)).sum(),
        denominator: raters.len() as u64,
    })
}

/// Community-average prediction, rounded half up.
pub fn community_predict(train: &RatingMatrix, item: ItemId) -> Option<Rating> {
    community_mean(train, item).map(|m| m.round_half_up() as Rating)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluationConfig {
    pub rank: RankOptions,
    /// Round the community average like the model's predictions.
    pub round_community: bool,
    /// Worker threads; 0 uses one per available core.
    pub jobs: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            rank: RankOptions::default(),
            round_community: true,
            jobs: 0,
        }
    }
}

/// One line of the per-prediction log.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionLogRow {
    pub user: UserId,
    pub item: ItemId,
    pub actual: Rating,
    pub raw: f64,
    pub rounded: Rating,
    pub candidates: usize,
    pub fallback: Fallback,
    pub community: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub split: String,
    pub backend: String,
    pub rmse_model: f64,
    pub rmse_community: f64,
    pub improvement_pct: f64,
    pub n_test: usize,
    pub fallback_count: usize,
    pub wall_time: Duration,
}

/// Relative RMSE reduction of the model over the community baseline, in percent.
pub fn improvement_pct(rmse_model: f64, rmse_community: f64) -> f64 {
    100.0 * (rmse_community - rmse_model) / rmse_community
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, EvaluationError> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Predicts every held-out rating of `split` and scores both predictors.
pub fn evaluate_split(
    split: &SplitPair,
    backend: &dyn RankingBackend,
    config: &EvaluationConfig,
) -> Result<(EvaluationReport, Vec<PredictionLogRow>), EvaluationError> {
    let started = Instant::now();
    let train = &split.train;
    if train.num_entries() == 0 {
        return Err(EvaluationError::EmptyTrain(split.name.clone()));
    }

    let predict_one = |t: &crate::dataset::RatingTriplet| {
        let record = predict(train, t.user, t.item, backend, config.rank).map_err(|source| {
            EvaluationError::Prediction {
                split: split.name.clone(),
                user: t.user,
                item: t.item,
                source,
            }
        })?;
        let community = community_mean(train, t.item).expect("non-empty training matrix");
        let community = if config.round_community {
            community.round_half_up() as f64
        } else {
            community.value()
        };
        Ok::<_, EvaluationError>(PredictionLogRow {
            user: t.user,
            item: t.item,
            actual: t.rating,
            raw: record.raw,
            rounded: record.rounded,
            candidates: record.candidate_count,
            fallback: record.fallback,
            community,
        })
    };
    let rows: Vec<PredictionLogRow> = pool(config.jobs)?.install(|| {
        split
            .test
            .par_iter()
            .map(predict_one)
            .collect::<Result<_, _>>()
    })?;

    let actuals: Vec<Rating> = rows.iter().map(|r| r.actual).collect();
    let model: Vec<Rating> = rows.iter().map(|r| r.rounded).collect();
    let community: Vec<f64> = rows.iter().map(|r| r.community).collect();
    let rmse_model = rmse(&model, &actuals)?;
    let rmse_community = rmse(&community, &actuals)?;

    let report = EvaluationReport {
        split: split.name.clone(),
        backend: backend.name().to_string(),
        rmse_model,
        rmse_community,
        improvement_pct: improvement_pct(rmse_model, rmse_community),
        n_test: rows.len(),
        fallback_count: rows.iter().filter(|r| r.fallback != Fallback::None).count(),
        wall_time: started.elapsed(),
    };
    Ok((report, rows))
}

/// RMSE of the community baseline alone, without running the model.
pub fn community_rmse(split: &SplitPair, round: bool) -> Result<f64, EvaluationError> {
    let mut predictions = Vec::with_capacity(split.test.len());
    let mut actuals = Vec::with_capacity(split.test.len());
    for t in &split.test {
        let mean = community_mean(&split.train, t.item)
            .ok_or_else(|| EvaluationError::EmptyTrain(split.name.clone()))?;
        predictions.push(if round {
            mean.round_half_up() as f64
        } else {
            mean.value()
        });
        actuals.push(t.rating);
    }
    rmse(&predictions, &actuals)
}

/// Per-split reports plus the averages across splits.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSummary {
    pub reports: Vec<EvaluationReport>,
    pub logs: Vec<Vec<PredictionLogRow>>,
    pub mean: EvaluationReport,
}

/// Evaluates each split in order and appends a `mean` row: arithmetic means
/// of the RMSEs and improvements, totals of the counts and times.
pub fn evaluate_all(
    splits: &[SplitPair],
    backend: &dyn RankingBackend,
    config: &EvaluationConfig,
) -> Result<EvaluationSummary, EvaluationError> {
    if splits.is_empty() {
        return Err(EvaluationError::NoSplits);
    }
    let mut reports = Vec::with_capacity(splits.len());
    let mut logs = Vec::with_capacity(splits.len());
    for split in splits {
        let (report, log) = evaluate_split(split, backend, config)?;
        reports.push(report);
        logs.push(log);
    }
    let mean = mean_row(&reports);
    Ok(EvaluationSummary {
        reports,
        logs,
        mean,
    })
}

fn mean_row(reports: &[EvaluationReport]) -> EvaluationReport {
    let n = reports.len() as f64;
    let avg = |f: fn(&EvaluationReport) -> f64| {
        reports.iter().map(f).collect::<CompensatedSum>().total() / n
    };
    EvaluationReport {
        split: "mean".to_string(),
        backend: reports[0].backend.clone(),
        rmse_model: avg(|r| r.rmse_model),
        rmse_community: avg(|r| r.rmse_community),
        improvement_pct: avg(|r| r.improvement_pct),
        n_test: reports.iter().map(|r| r.n_test).sum(),
        fallback_count: reports.iter().map(|r| r.fallback_count).sum(),
        wall_time: reports.iter().map(|r| r.wall_time).sum(),
    }
}

/// Formats `x` with four decimals, rounding a tie on the last printed digit
/// upward.
pub fn fixed4(x: f64) -> String {
    // A value exactly halfway between two 4-decimal numbers is k/32 for an
    // integer k, so its 5-decimal expansion is exact.
    if x.is_finite() && (x * 32.0).fract() == 0.0 {
        let scaled = (x * 100_000.0) as i64;
        if scaled.rem_euclid(10) == 5 {
            let ten_thousandths = (scaled + 5).div_euclid(10);
            let sign = if ten_thousandths < 0 { "-" } else { "" };
            let abs = ten_thousandths.unsigned_abs();
            return format!("{sign}{}.{:04}", abs / 10_000, abs % 10_000);
        }
    }
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

pub const REPORT_HEADER: &str =
    "split,backend,rmse_model,rmse_community,improvement_pct,n_test,fallback_count,wall_time_s";

pub const LOG_HEADER: &str = "user,item,actual,raw,rounded,candidates,fallback";

/// Writes the report CSV. Wall time is left blank unless `with_timing`,
/// keeping repeated runs byte-identical.
pub fn write_report_csv<W: Write>(
    mut out: W,
    summary: &EvaluationSummary,
    with_timing: bool,
) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in summary.reports.iter().chain(std::iter::once(&summary.mean)) {
        let wall = if with_timing {
            fixed4(r.wall_time.as_secs_f64())
        } else {
            String::new()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.split,
            r.backend,
            fixed4(r.rmse_model),
            fixed4(r.rmse_community),
            fixed4(r.improvement_pct),
            r.n_test,
            r.fallback_count,
            wall
        )?;
    }
    Ok(())
}

pub fn write_log_csv<W: Write>(mut out: W, rows: &[PredictionLogRow]) -> io::Result<()> {
    writeln!(out, "{LOG_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.user,
            r.item,
            r.actual,
            fixed4(r.raw),
            r.rounded,
            r.candidates,
            r.fallback
        )?;
    }
    Ok(())
}

/// Human-readable table of a summary.
pub fn write_table<W: Write>(mut out: W, summary: &EvaluationSummary) -> io::Result<()> {
    writeln!(
        out,
        "{:<8} {:<8} {:>10} {:>10} {:>12} {:>7} {:>9} {:>9}",
        "split", "backend", "rmse", "community", "improvement", "n_test", "fallback", "time_s"
    )?;
    for r in summary.reports.iter().chain(std::iter::once(&summary.mean)) {
        writeln!(
            out,
            "{:<8} {:<8} {:>10} {:>10} {:>11}% {:>7} {:>9} {:>9.2}",
            r.split,
            r.backend,
            fixed4(r.rmse_model),
            fixed4(r.rmse_community),
            format!("{:.2}", r.improvement_pct),
            r.n_test,
            r.fallback_count,
            r.wall_time.as_secs_f64()
        )?;
    }
    Ok(())
}
