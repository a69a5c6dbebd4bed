//! Run configuration, read from a TOML file.
//!
//! ```toml
//! workdir = "work"                 # every command reads and writes here
//! ratings = "data/ratings.tsv"     # default: <workdir>/data/ratings.tsv
//! venues = "data/venues.jsonl"     # default: <workdir>/data/venues.jsonl
//! seeds = [1, 2, 3, 4, 5]          # split seeds
//! beta = 0.2                       # hybrid fusion weight
//! ks = [1, 2, 3, 4, 5]
//! threshold = 4                    # ratings >= threshold are relevant
//!
//! [hyperparams]
//! d = 90
//! gamma = 0.0001
//! lambda = 1.0
//! alphas = [0.5, 0.2, 0.3]         # geo, review, category
//! epsilon = 0.0001
//! max_iter = 1000
//! seed = 0
//!
//! [text]
//! min_token_len = 2
//! max_vocab = 20000
//! epochs = 20
//! l2 = 0.0001
//! eta0 = 0.5
//! clip = 3.0
//! seed = 0
//!
//! [synth]
//! n_users = 20
//! m_venues = 50
//! n_clusters = 4
//! seed = 7
//! ```
//!
//! Relative paths are resolved against the current directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{SyntheticConfig, DEFAULT_POSITIVE_THRESHOLD};
use crate::hybrid::DEFAULT_BETA;
use crate::ranking::DEFAULT_KS;
use crate::similarity::TextConfig;
use crate::trainer::Hyperparams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub n_users: usize,
    pub m_venues: usize,
    pub n_clusters: usize,
    pub seed: u64,
    pub ratings_per_user: usize,
    pub home_share: f64,
    pub noise: f64,
    pub reviews_per_venue: usize,
    pub radius_deg: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        let base = SyntheticConfig::new(20, 50, 4, 7);
        SynthSettings {
            n_users: base.n_users,
            m_venues: base.m_venues,
            n_clusters: base.n_clusters,
            seed: base.seed,
            ratings_per_user: base.ratings_per_user,
            home_share: base.home_share,
            noise: base.noise,
            reviews_per_venue: base.reviews_per_venue,
            radius_deg: base.radius_deg,
        }
    }
}

impl SynthSettings {
    pub fn to_generator(&self) -> SyntheticConfig {
        SyntheticConfig {
            n_users: self.n_users,
            m_venues: self.m_venues,
            n_clusters: self.n_clusters,
            seed: self.seed,
            ratings_per_user: self.ratings_per_user,
            home_share: self.home_share,
            noise: self.noise,
            reviews_per_venue: self.reviews_per_venue,
            radius_deg: self.radius_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub workdir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub venues: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub beta: f64,
    pub ks: Vec<usize>,
    pub threshold: u8,
    pub hyperparams: Hyperparams,
    pub text: TextConfig,
    pub synth: SynthSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workdir: PathBuf::from("work"),
            ratings: None,
            venues: None,
            seeds: vec![1, 2, 3, 4, 5],
            beta: DEFAULT_BETA,
            ks: DEFAULT_KS.to_vec(),
            threshold: DEFAULT_POSITIVE_THRESHOLD,
            hyperparams: Hyperparams::default(),
            text: TextConfig::default(),
            synth: SynthSettings::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { msg, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                msg,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::new(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.seeds.is_empty() {
            return bad("at least one split seed is required".into());
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta {} is outside [0, 1]", self.beta));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return bad("ks must be non-empty and positive".into());
        }
        if !(2..=5).contains(&self.threshold) {
            return bad(format!("threshold {} must lie in 2..=5", self.threshold));
        }
        if self.text.clip.is_nan()
            || self.text.clip <= 0.0
            || self.text.epochs == 0
            || self.text.max_vocab == 0
        {
            return bad("text: clip, epochs and max_vocab must be positive".into());
        }
        self.hyperparams.validate().or_else(|e| bad(e.to_string()))
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn ratings_path(&self) -> PathBuf {
        self.ratings
            .clone()
            .unwrap_or_else(|| self.workdir.join("data").join("ratings.tsv"))
    }

    pub fn venues_path(&self) -> PathBuf {
        self.venues
            .clone()
            .unwrap_or_else(|| self.workdir.join("data").join("venues.jsonl"))
    }
}
