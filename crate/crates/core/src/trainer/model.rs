use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Hyperparams, TrainError};

/// `d x count` matrix stored column by column, so each latent vector is a
/// contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    d: usize,
    count: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(d: usize, count: usize) -> Self {
        FactorMatrix {
            d,
            count,
            data: vec![0.0; d * count],
        }
    }

    /// Builds from columns; every column must have length `d`.
    pub fn from_columns(d: usize, columns: &[Vec<f64>]) -> Result<Self, TrainError> {
        let mut data = Vec::with_capacity(d * columns.len());
        for c in columns {
            if c.len() != d {
                return Err(TrainError::Shape(format!(
                    "column of length {} for d={d}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(FactorMatrix {
            d,
            count: columns.len(),
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.d..(c + 1) * self.d]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.d..(c + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// `self -= step * other`.
    pub fn sub_scaled(&mut self, step: f64, other: &FactorMatrix) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= step * b;
        }
    }

    /// Entries in row-major `d x count` order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.d {
            for c in 0..self.count {
                out.push(self.data[c * self.d + r]);
            }
        }
        out
    }

    pub fn from_row_major(d: usize, count: usize, values: &[f64]) -> Result<Self, TrainError> {
        if values.len() != d * count {
            return Err(TrainError::Shape(format!(
                "{} values for a {d}x{count} matrix",
                values.len()
            )));
        }
        let mut data = vec![0.0; d * count];
        for r in 0..d {
            for c in 0..count {
                data[c * d + r] = values[r * count + c];
            }
        }
        Ok(FactorMatrix { d, count, data })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trained user and venue factors with their id lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub users: FactorMatrix,
    pub venues: FactorMatrix,
    pub hyperparams: Hyperparams,
    pub loss_trace: Vec<f64>,
    user_ids: Vec<String>,
    venue_ids: Vec<String>,
    user_index: HashMap<String, usize>,
    venue_index: HashMap<String, usize>,
}

impl LatentModel {
    pub fn new(
        users: FactorMatrix,
        venues: FactorMatrix,
        hyperparams: Hyperparams,
        loss_trace: Vec<f64>,
        user_ids: Vec<String>,
        venue_ids: Vec<String>,
    ) -> Result<Self, TrainError> {
        if users.count() != user_ids.len() || venues.count() != venue_ids.len() {
            return Err(TrainError::Shape(
                "id lists do not match factor columns".into(),
            ));
        }
        if users.dim() != venues.dim() {
            return Err(TrainError::Shape("user and venue dimensions differ".into()));
        }
        let index = |ids: &[String]| {
            ids.iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), i))
                .collect()
        };
        Ok(LatentModel {
            user_index: index(&user_ids),
            venue_index: index(&venue_ids),
            users,
            venues,
            hyperparams,
            loss_trace,
            user_ids,
            venue_ids,
        })
    }

    pub fn dim(&self) -> usize {
        self.users.dim()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn venue_ids(&self) -> &[String] {
        &self.venue_ids
    }

    pub fn user_idx(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn venue_idx(&self, id: &str) -> Option<usize> {
        self.venue_index.get(id).copied()
    }

    /// `u_i . v_j` by index.
    pub fn score_idx(&self, i: usize, j: usize) -> f64 {
        dot(self.users.col(i), self.venues.col(j))
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.loss_trace.last().copied()
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            d: self.dim(),
            n: self.users.count(),
            m: self.venues.count(),
            users: self.user_ids.clone(),
            venues: self.venue_ids.clone(),
            u: self.users.to_row_major(),
            v: self.venues.to_row_major(),
            hyperparams: self.hyperparams.clone(),
            loss_trace: self.loss_trace.clone(),
        }
    }

    pub fn from_file(f: ModelFile) -> Result<Self, TrainError> {
        if f.users.len() != f.n || f.venues.len() != f.m {
            return Err(TrainError::Model("index maps do not match n/m".into()));
        }
        let u = FactorMatrix::from_row_major(f.d, f.n, &f.u)?;
        let v = FactorMatrix::from_row_major(f.d, f.m, &f.v)?;
        Self::new(u, v, f.hyperparams, f.loss_trace, f.users, f.venues)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, TrainError> {
        let f: ModelFile = serde_json::from_str(s).map_err(|e| TrainError::Model(e.to_string()))?;
        Self::from_file(f)
    }
}

/// On-disk model layout. `users[i]` / `venues[j]` name column `i` / `j`;
/// `u` and `v` are row-major `d x n` and `d x m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "user_index")]
    pub users: Vec<String>,
    #[serde(rename = "venue_index")]
    pub venues: Vec<String>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    pub hyperparams: Hyperparams,
    pub loss_trace: Vec<f64>,
}
