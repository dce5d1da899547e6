//! Ranking of candidate users against the active user's query.
//!
//! Scoring is pluggable through [`RankingBackend`]; the vector space model
//! ([`VectorSpace`], cosine similarity) is the only built-in backend.

use std::cmp::Reverse;

use thiserror::Error;

use crate::dataset::UserId;
use crate::weighting::{QueryVector, WeightedProfile};

/// Scores closer than this are treated as equal when ordering candidates.
pub const SCORE_RESOLUTION: f64 = 1e-12;

/// A retrieval model that scores one document against a query.
///
/// Implementations must be deterministic. They only ever see the weighted
/// sparse vectors, never raw ratings.
pub trait RankingBackend: Send + Sync {
    fn name(&self) -> &str;

    fn score(&self, query: &QueryVector, doc: &WeightedProfile) -> f64;
}

/// Vector space model: cosine of the angle between query and document.
#[derive(Debug, Clone, Copy, Default)]
pub struct VectorSpace;

impl RankingBackend for VectorSpace {
    fn name(&self) -> &str {
        "vsm"
    }

    fn score(&self, query: &QueryVector, doc: &WeightedProfile) -> f64 {
        cosine_score(query, doc)
    }
}

/// Names accepted by [`backend_by_name`].
pub const BACKEND_NAMES: &[&str] = &["vsm"];

#[derive(Debug, Error, PartialEq)]
#[error("unknown backend {name:?}; available: {}", BACKEND_NAMES.join(", "))]
pub struct UnknownBackend {
    pub name: String,
}

pub fn backend_by_name(name: &str) -> Result<Box<dyn RankingBackend>, UnknownBackend> {
    match name {
        "vsm" => Ok(Box::new(VectorSpace)),
        _ => Err(UnknownBackend {
            name: name.to_string(),
        }),
    }
}

/// Cosine similarity of two sparse vectors sorted by item id.
///
/// Returns 0 when either vector is empty or has zero norm.
pub fn cosine_score(query: &QueryVector, doc: &WeightedProfile) -> f64 {
    let q = &query.weights;
    let d = &doc.weights;
    let (mut qi, mut di) = (0, 0);
    let mut dot = 0.0;
    while qi < q.len() && di < d.len() {
        match q[qi].0.cmp(&d[di].0) {
            std::cmp::Ordering::Less => qi += 1,
            std::cmp::Ordering::Greater => di += 1,
            std::cmp::Ordering::Equal => {
                dot += q[qi].1 * d[di].1;
                qi += 1;
                di += 1;
            }
        }
    }
    let q_norm: f64 = q.iter().map(|&(_, w)| w * w).sum();
    let d_norm: f64 = d.iter().map(|&(_, w)| w * w).sum();
    if q_norm == 0.0 || d_norm == 0.0 {
        return 0.0;
    }
    (dot / (q_norm.sqrt() * d_norm.sqrt())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedUser {
    pub user: UserId,
    /// Score snapped to [`SCORE_RESOLUTION`].
    pub score: f64,
    pub rank: usize,
}

/// Candidates ordered from most to least similar; rank 0 is the best match.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingList {
    pub backend: String,
    pub entries: Vec<RankedUser>,
}

impl RankingList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.entries.iter().map(|e| e.user)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RankOptions {
    /// Keep candidates with a zero score at the tail of the list instead of
    /// dropping them.
    pub keep_zero_similarity: bool,
}

fn snap(score: f64) -> i64 {
    (score / SCORE_RESOLUTION).round() as i64
}

/// Scores every document and orders them by descending score, breaking ties
/// by ascending user id. Documents scoring zero are dropped unless
/// `options.keep_zero_similarity` is set.
pub fn rank(
    query: &QueryVector,
    docs: &[WeightedProfile],
    backend: &dyn RankingBackend,
    options: RankOptions,
) -> RankingList {
    let mut scored: Vec<(i64, UserId)> = docs
        .iter()
        .map(|doc| (snap(backend.score(query, doc)), doc.user))
        .filter(|&(key, _)| options.keep_zero_similarity || key > 0)
        .collect();
    scored.sort_unstable_by_key(|&(key, user)| (Reverse(key), user));

    let entries = scored
        .into_iter()
        .enumerate()
        .map(|(rank, (key, user))| RankedUser {
            user,
            score: key as f64 * SCORE_RESOLUTION,
            rank,
        })
        .collect();
    RankingList {
        backend: backend.name().to_string(),
        entries,
    }
}
