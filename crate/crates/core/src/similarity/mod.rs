//! Cross-venue similarity matrices and the weighted stack the trainer
//! consumes.
//!
//! Three measures are provided: great-circle proximity, review-classifier
//! agreement and category-bag cosine. Any number of extra matrices can be
//! stacked alongside them.

mod category;
mod geo;
mod io;
mod review;
mod text;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

pub use category::{bag_cosine, category_similarity};
pub use geo::{angular_distance, geo_similarity, EARTH_RADIUS_KM};
pub use io::{load_classifiers, read_matrix, save_classifiers, write_matrix};
pub use review::{review_similarity, train_review_classifier, ReviewClassifier, ReviewModel};
pub use text::{tokenize, SparseVec, TextConfig, TfIdf};

/// Weights of the geo, review and category matrices, in that order.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.5, 0.2, 0.3];

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("similarity stack needs at least one matrix")]
    EmptyStack,
    #[error("{matrices} matrices but {weights} weights")]
    WeightCount { matrices: usize, weights: usize },
    #[error("weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("matrix sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("matrix has {got} values, expected {expected}")]
    Shape { got: usize, expected: usize },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: std::path::PathBuf,
        line: usize,
        msg: String,
    },
    #[error("cannot access {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown similarity kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Geo,
    Review,
    Category,
    Custom,
}

impl SimilarityKind {
    pub const BUILTIN: [SimilarityKind; 3] = [Self::Geo, Self::Review, Self::Category];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Geo => "geo",
            Self::Review => "review",
            Self::Category => "category",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimilarityKind {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geo" => Ok(Self::Geo),
            "review" => Ok(Self::Review),
            "category" => Ok(Self::Category),
            "custom" => Ok(Self::Custom),
            other => Err(SimilarityError::UnknownKind(other.to_string())),
        }
    }
}

/// Dense `m x m` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    kind: SimilarityKind,
    m: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(kind: SimilarityKind, m: usize, values: Vec<f64>) -> Result<Self, SimilarityError> {
        if values.len() != m * m {
            return Err(SimilarityError::Shape {
                got: values.len(),
                expected: m * m,
            });
        }
        Ok(SimilarityMatrix { kind, m, values })
    }

    pub fn zeros(kind: SimilarityKind, m: usize) -> Self {
        SimilarityMatrix {
            kind,
            m,
            values: vec![0.0; m * m],
        }
    }

    /// Fills every ordered pair `(i, j)` with `f(i, j)`.
    pub fn from_fn(kind: SimilarityKind, m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                values.push(f(i, j));
            }
        }
        SimilarityMatrix { kind, m, values }
    }

    /// Evaluates `f` on `i <= j` only and mirrors the result.
    pub fn symmetric_from_fn(
        kind: SimilarityKind,
        m: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = f(i, j);
                values[i * m + j] = v;
                values[j * m + i] = v;
            }
        }
        SimilarityMatrix { kind, m, values }
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.m + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|i| (i + 1..self.m).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Ordered similarity matrices with their non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityStack {
    matrices: Vec<SimilarityMatrix>,
    weights: Vec<f64>,
}

impl SimilarityStack {
    pub fn new(
        matrices: Vec<SimilarityMatrix>,
        weights: Vec<f64>,
    ) -> Result<Self, SimilarityError> {
        if matrices.is_empty() {
            return Err(SimilarityError::EmptyStack);
        }
        if matrices.len() != weights.len() {
            return Err(SimilarityError::WeightCount {
                matrices: matrices.len(),
                weights: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(SimilarityError::BadWeight(w));
        }
        let m = matrices[0].size();
        if let Some(other) = matrices.iter().find(|s| s.size() != m) {
            return Err(SimilarityError::SizeMismatch(m, other.size()));
        }
        Ok(SimilarityStack { matrices, weights })
    }

    /// One all-zero matrix with weight 1: the similarity-free reduction.
    pub fn plain(m: usize) -> Self {
        SimilarityStack {
            matrices: vec![SimilarityMatrix::zeros(SimilarityKind::Custom, m)],
            weights: vec![1.0],
        }
    }

    pub fn matrices(&self) -> &[SimilarityMatrix] {
        &self.matrices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn size(&self) -> usize {
        self.matrices[0].size()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Same matrices, new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self, SimilarityError> {
        Self::new(self.matrices.clone(), weights)
    }

    /// `sum_z alpha_z / exp(|S_z(k, j)|)`, the factor that scales the score
    /// margin of the pair `(k, j)`.
    pub fn pair_weight(&self, k: usize, j: usize) -> f64 {
        self.matrices
            .iter()
            .zip(&self.weights)
            .map(|(s, a)| a / s.get(k, j).abs().exp())
            .sum()
    }

    /// `pair_weight` for every ordered pair, row-major.
    pub fn pair_weights(&self) -> Vec<f64> {
        let m = self.size();
        let mut out = Vec::with_capacity(m * m);
        for k in 0..m {
            for j in 0..m {
                out.push(self.pair_weight(k, j));
            }
        }
        out
    }
}

pub fn geo_matrix(d: &Dataset) -> SimilarityMatrix {
    let v = d.venues();
    SimilarityMatrix::symmetric_from_fn(SimilarityKind::Geo, v.len(), |i, j| {
        geo_similarity(&v[i], &v[j])
    })
}

pub fn category_matrix(d: &Dataset) -> SimilarityMatrix {
    let v = d.venues();
    SimilarityMatrix::symmetric_from_fn(SimilarityKind::Category, v.len(), |i, j| {
        category_similarity(&v[i], &v[j])
    })
}

/// `S(i, j)` is venue `i`'s classifier applied to venue `j`'s reviews.
pub fn review_matrix(d: &Dataset, model: &ReviewModel, clip: f64) -> SimilarityMatrix {
    let features: Vec<Vec<SparseVec>> = d
        .venues()
        .iter()
        .map(|v| {
            v.reviews
                .iter()
                .map(|r| model.vectorizer.transform(&r.text))
                .collect()
        })
        .collect();
    SimilarityMatrix::from_fn(SimilarityKind::Review, d.n_venues(), |i, j| {
        review::mean_decision(&model.classifiers[i], &features[j], clip)
    })
}

/// Geo, review and category matrices weighted by `alphas`.
pub fn build_stack(
    d: &Dataset,
    alphas: [f64; 3],
    cfg: &TextConfig,
) -> Result<(SimilarityStack, ReviewModel), SimilarityError> {
    let model = ReviewModel::fit(d, cfg);
    let matrices = vec![
        geo_matrix(d),
        review_matrix(d, &model, cfg.clip),
        category_matrix(d),
    ];
    Ok((SimilarityStack::new(matrices, alphas.to_vec())?, model))
}
