//! Collaborative filtering recast as document retrieval.
//!
//! Users play the role of documents, items the role of terms, and the user
//! whose rating is wanted plays the query. Training users who rated the
//! target item are ranked by similarity to the active user, and their ratings
//! of that item are averaged with weights that decay linearly with rank.
//!
//! The pipeline for one prediction is
//! [`weighting::build_profiles`] → [`ranking::rank`] →
//! [`prediction::decayed_average`], wrapped by [`prediction::predict`].
//! [`evaluation`] runs it over held-out ratings and compares it with the
//! per-item community average.

pub mod cli;
pub mod dataset;
pub mod evaluation;
pub mod prediction;
pub mod ranking;
pub mod summation;
pub mod weighting;

pub use dataset::{ItemId, Rating, RatingMatrix, RatingRange, SplitPair, UserId};
pub use prediction::{predict, Fallback, PredictionRecord};
pub use ranking::{RankOptions, RankingBackend, RankingList, VectorSpace};
