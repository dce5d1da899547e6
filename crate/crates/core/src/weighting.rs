//! Turns ratings into retrieval weights relative to one active user.
//!
//! Every training user who rated the target item becomes a document whose
//! terms are the items it shares with the active user. A term weight is the
//! agreement between the two ratings, scaled to [0, 1]. The active user
//! becomes the query, weighted by `log2(n / n_i)` where `n_i` counts the other
//! users who also rated item `i`.

use thiserror::Error;

use crate::dataset::{ItemId, Rating, RatingMatrix, RatingRange, UserId};

#[derive(Debug, Error, PartialEq)]
pub enum WeightingError {
    #[error("rating {rating} outside [{min}, {max}]")]
    RatingOutOfRange {
        rating: Rating,
        min: Rating,
        max: Rating,
    },
    #[error("user {0} has no training ratings")]
    ColdStart(UserId),
}

/// Sparse document vector of one candidate user, ascending by item id.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedProfile {
    pub user: UserId,
    pub weights: Vec<(ItemId, f64)>,
}

/// Sparse query vector of the active user, ascending by item id.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    pub active_user: UserId,
    pub weights: Vec<(ItemId, f64)>,
    /// Co-rater count for each query item; only items with a count of at
    /// least one are listed.
    pub corater_counts: Vec<(ItemId, usize)>,
}

impl QueryVector {
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Agreement weight between a candidate's rating and the active user's
/// rating: 1 for equal ratings, 0 for opposite ends of the scale.
pub fn document_weight(
    r_user: Rating,
    r_active: Rating,
    range: RatingRange,
) -> Result<f64, WeightingError> {
    for rating in [r_user, r_active] {
        if !range.contains(rating) {
            return Err(WeightingError::RatingOutOfRange {
                rating,
                min: range.min,
                max: range.max,
            });
        }
    }
    Ok(agreement(r_user, r_active, range))
}

#[inline]
fn agreement(a: Rating, b: Rating, range: RatingRange) -> f64 {
    1.0 - f64::from(a.abs_diff(b)) / f64::from(range.span())
}

/// Inverse co-rater frequency weight `log2(n / n_i)`.
#[inline]
pub fn query_weight(num_users: usize, corater_count: usize) -> f64 {
    (num_users as f64 / corater_count as f64).log2()
}

/// Builds the candidate documents and the query for predicting
/// `active_user`'s rating of `target_item`.
///
/// Candidates are the users other than `active_user` with a training rating
/// for `target_item`, in ascending id order. The target item is never a term
/// of either the query or the documents, even if the active user happens to
/// have rated it in `train`.
pub fn build_profiles(
    train: &RatingMatrix,
    active_user: UserId,
    target_item: ItemId,
) -> Result<(Vec<WeightedProfile>, QueryVector), WeightingError> {
    let active = train.user_ratings(active_user);
    if active.is_empty() {
        return Err(WeightingError::ColdStart(active_user));
    }
    let range = train.range();

    // 0 marks "not rated by the active user"
    let mut active_dense = vec![0 as Rating; train.num_items() + 1];
    for &(item, rating) in active {
        if item != target_item {
            active_dense[item.0 as usize] = rating;
        }
    }

    let profiles = train
        .item_ratings(target_item)
        .iter()
        .filter(|&&(user, _)| user != active_user)
        .map(|&(user, _)| {
            let weights = train
                .user_ratings(user)
                .iter()
                .filter_map(|&(item, rating)| {
                    let active_rating = active_dense[item.0 as usize];
                    (active_rating != 0).then(|| (item, agreement(rating, active_rating, range)))
                })
                .collect();
            WeightedProfile { user, weights }
        })
        .collect();

    let n = train.num_users();
    let mut weights = Vec::with_capacity(active.len());
    let mut corater_counts = Vec::with_capacity(active.len());
    for &(item, _) in active {
        if item == target_item {
            continue;
        }
        // the active user is one of the item's raters
        let corater_count = train.item_ratings(item).len() - 1;
        if corater_count >= 1 {
            weights.push((item, query_weight(n, corater_count)));
            corater_counts.push((item, corater_count));
        }
    }

    Ok((
        profiles,
        QueryVector {
            active_user,
            weights,
            corater_counts,
        },
    ))
}
