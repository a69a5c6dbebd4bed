//! Similarity-aware collaborative ranking for venue suggestion.
//!
//! User and venue latent factors are trained so that each user's liked
//! venues outrank the disliked ones, with the pairwise penalty softened for
//! venue pairs that are close geographically, share categories, or are
//! reviewed alike. Rankings can be evaluated with P@k / nDCG@k and fused with
//! an external content-based ranking.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod hybrid;
pub mod ranking;
pub mod similarity;
pub mod trainer;
