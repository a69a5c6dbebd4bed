//! Latent-factor training for similarity-aware collaborative ranking.
//!
//! For user `i`, every relevant venue `k` should outscore every irrelevant
//! venue `j`. The margin `u_i . (v_k - v_j)` is scaled by
//! `sum_z alpha_z / exp(|S_z(k, j)|)`, pushed through a logistic loss, summed
//! over `k` into a surrogate height per irrelevant venue, squared, and
//! averaged over the user's irrelevant venues. `U` and `V` are fitted by
//! alternating full-batch gradient steps.

mod model;
mod objective;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::{SimilarityError, DEFAULT_ALPHAS};

pub use model::{FactorMatrix, LatentModel, ModelFile};
pub use objective::{
    delta, gradients, objective, sigmoid_neg, softplus, surrogate_height, Gradients,
    PairwiseLossContext, Problem,
};
pub use train::{initialize, train, train_with_observer};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("objective became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error("unknown {kind} {id:?}")]
    UnknownId { kind: &'static str, id: String },
    #[error("malformed model file: {0}")]
    Model(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Latent dimension.
    pub d: usize,
    /// Learning rate.
    pub gamma: f64,
    /// L2 regularization strength.
    pub lambda: f64,
    /// One weight per similarity matrix.
    pub alphas: Vec<f64>,
    /// Stop once the objective changes by at most this much.
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            d: 90,
            gamma: 1e-4,
            lambda: 1.0,
            alphas: DEFAULT_ALPHAS.to_vec(),
            epsilon: 1e-4,
            max_iter: 1000,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidHyperparams(m.to_string()));
        if self.d < 1 {
            return bad("d must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1");
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("alphas must be non-negative");
        }
        Ok(())
    }
}
