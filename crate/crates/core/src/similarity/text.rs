//! Review text featurization: lowercase alphanumeric tokens, TF-IDF weights,
//! L2-normalized sparse vectors.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Sparse feature vector as `(token index, weight)` pairs sorted by index.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextConfig {
    pub min_token_len: usize,
    pub max_vocab: usize,
    pub epochs: usize,
    pub l2: f64,
    /// Initial SGD step; decays as `eta0 / (1 + eta0 * l2 * t)`.
    pub eta0: f64,
    pub clip: f64,
    pub seed: u64,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            min_token_len: 2,
            max_vocab: 20_000,
            epochs: 20,
            l2: 1e-4,
            eta0: 0.5,
            clip: 3.0,
            seed: 0,
        }
    }
}

pub fn tokenize(text: &str, min_len: usize) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= min_len)
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdf {
    pub tokens: Vec<String>,
    pub idf: Vec<f64>,
    pub min_token_len: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl TfIdf {
    /// Fits the vocabulary on a corpus. Keeps the `max_vocab` tokens with the
    /// highest document frequency (ties by token), `idf = ln((1+N)/(1+df)) + 1`.
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a str>, cfg: &TextConfig) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n_docs = 0usize;
        for doc in docs {
            n_docs += 1;
            let mut toks = tokenize(doc, cfg.min_token_len);
            toks.sort_unstable();
            toks.dedup();
            for t in toks {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(cfg.max_vocab);
        ranked.sort_by(|a, b| a.0.cmp(&b.0));

        let n = n_docs as f64;
        let idf = ranked
            .iter()
            .map(|(_, d)| ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0)
            .collect();
        let tokens = ranked.into_iter().map(|(t, _)| t).collect();
        Self::from_parts(tokens, idf, cfg.min_token_len)
    }

    pub fn from_parts(tokens: Vec<String>, idf: Vec<f64>, min_token_len: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        TfIdf {
            tokens,
            idf,
            min_token_len,
            index,
        }
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(mut self) -> Self {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn transform(&self, text: &str) -> SparseVec {
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for t in tokenize(text, self.min_token_len) {
            if let Some(&i) = self.index.get(&t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut v: SparseVec = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i as usize]))
            .collect();
        v.sort_unstable_by_key(|&(i, _)| i);
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut v {
                *w /= norm;
            }
        }
        v
    }
}
