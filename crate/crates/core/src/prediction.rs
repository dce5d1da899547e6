//! Rating prediction from a ranked list of similar users.
//!
//! The rating of the user at rank `r` in a list of length `R` is weighted by
//! `1 - r/R` and the weighted sum is divided by `(R + 1) / 2`, the total of
//! those weights. Both sums are carried out on integers (`R - r` and
//! `R(R + 1)/2`), so the result is a single correctly rounded division and a
//! list of equal ratings predicts that rating exactly.

use std::fmt;

use thiserror::Error;

use crate::dataset::{ItemId, Rating, RatingMatrix, UserId};
use crate::ranking::{rank, RankOptions, RankingBackend, RankingList};
use crate::summation::CompensatedSum;
use crate::weighting::{build_profiles, WeightingError};

#[derive(Debug, Error, PartialEq)]
pub enum PredictionError {
    #[error("ranking list is empty")]
    EmptyRanking,
    #[error("ranked user {0} has no rating for the target item")]
    MissingRating(UserId),
    #[error(transparent)]
    Weighting(#[from] WeightingError),
}

/// Which path produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fallback {
    /// Rank-weighted average of the ranked users.
    None,
    /// The ranking was empty; the global training mean was used.
    GlobalMean,
    /// The target item lies outside the training matrix; the global training
    /// mean was used.
    ItemUnrated,
}

impl Fallback {
    pub fn as_str(&self) -> &'static str {
        match self {
            Fallback::None => "none",
            Fallback::GlobalMean => "global_mean",
            Fallback::ItemUnrated => "item_unrated",
        }
    }
}

impl fmt::Display for Fallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub user: UserId,
    pub item: ItemId,
    pub raw: f64,
    pub rounded: Rating,
    pub candidate_count: usize,
    pub fallback: Fallback,
}

/// Decay weight `1 - rank/len` of a ranked user.
pub fn decay_weight(rank: usize, len: usize) -> f64 {
    1.0 - rank as f64 / len as f64
}

/// Sum of the decay weights of a list of length `len`, `(len + 1) / 2`.
pub fn normalization(len: usize) -> f64 {
    (len as f64 + 1.0) / 2.0
}

/// Decay weights of a list of length `len`, summed term by term.
pub fn decay_weight_total(len: usize) -> f64 {
    (0..len)
        .map(|rank| decay_weight(rank, len))
        .collect::<CompensatedSum>()
        .total()
}

/// Rounds to the nearest integer, halves upward.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Exact ratio `numerator / denominator` of two non-negative integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactMean {
    pub numerator: u64,
    pub denominator: u64,
}

impl ExactMean {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Nearest integer, halves upward, without floating-point error.
    pub fn round_half_up(&self) -> u64 {
        (2 * self.numerator + self.denominator) / (2 * self.denominator)
    }
}

/// Mean of all training ratings, `None` for an empty matrix.
pub fn global_mean(train: &RatingMatrix) -> Option<ExactMean> {
    (train.num_entries() > 0).then(|| ExactMean {
        numerator: train.rating_sum(),
        denominator: train.num_entries() as u64,
    })
}

/// Rank-decayed weighted sum as an exact ratio.
///
/// `numerator = Σ (R - r) * rating_r`, `denominator = R (R + 1) / 2`; dividing
/// both by `R` recovers the textbook form.
pub fn decayed_average<F>(ranking: &RankingList, rating_of: F) -> Result<ExactMean, PredictionError>
where
    F: Fn(UserId) -> Option<Rating>,
{
    let len = ranking.len() as u64;
    if len == 0 {
        return Err(PredictionError::EmptyRanking);
    }
    let mut numerator = 0u64;
    for entry in &ranking.entries {
        let rating = rating_of(entry.user).ok_or(PredictionError::MissingRating(entry.user))?;
        numerator += (len - entry.rank as u64) * u64::from(rating);
    }
    Ok(ExactMean {
        numerator,
        denominator: len * (len + 1) / 2,
    })
}

/// Rank-weighted average rating of the users in `ranking`.
pub fn aggregate<F>(ranking: &RankingList, rating_of: F) -> Result<f64, PredictionError>
where
    F: Fn(UserId) -> Option<Rating>,
{
    decayed_average(ranking, rating_of).map(|m| m.value())
}

/// Predicts `user`'s rating of `item` from the training matrix.
///
/// Fails only when the user has no training ratings. Items without usable
/// neighbours fall back to the global training mean.
pub fn predict(
    train: &RatingMatrix,
    user: UserId,
    item: ItemId,
    backend: &dyn RankingBackend,
    options: RankOptions,
) -> Result<PredictionRecord, PredictionError> {
    let (profiles, query) = build_profiles(train, user, item)?;
    let fallback = |candidate_count, fallback| {
        // build_profiles succeeded, so the matrix holds at least one rating
        let mean = global_mean(train).expect("non-empty training matrix");
        PredictionRecord {
            user,
            item,
            raw: mean.value(),
            rounded: mean.round_half_up() as Rating,
            candidate_count,
            fallback,
        }
    };
    if !train.has_item(item) {
        return Ok(fallback(0, Fallback::ItemUnrated));
    }

    let ranking = rank(&query, &profiles, backend, options);
    if ranking.is_empty() {
        return Ok(fallback(0, Fallback::GlobalMean));
    }
    let raters = train.item_ratings(item);
    let mean = decayed_average(&ranking, |u| {
        raters
            .binary_search_by_key(&u, |&(rater, _)| rater)
            .ok()
            .map(|idx| raters[idx].1)
    })?;
    Ok(PredictionRecord {
        user,
        item,
        raw: mean.value(),
        rounded: mean.round_half_up() as Rating,
        candidate_count: ranking.len(),
        fallback: Fallback::None,
    })
}
