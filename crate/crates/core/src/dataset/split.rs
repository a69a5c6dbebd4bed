use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{save_ratings, Dataset, DatasetError, Rating};

/// Smallest dataset that yields three non-empty parts.
pub const MIN_SPLIT_RATINGS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Rating>,
    pub validation: Vec<Rating>,
    pub test: Vec<Rating>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub train_file: String,
    pub validation_file: String,
    pub test_file: String,
}

/// Uniformly shuffles the ratings and cuts them 70/10/20.
///
/// Validation gets `floor(N/10)` ratings, test `floor(N/5)`, train the rest.
/// Each part keeps the original rating order.
pub fn split_dataset(d: &Dataset, seed: u64) -> Result<Split, DatasetError> {
    let n = d.ratings().len();
    if n < MIN_SPLIT_RATINGS {
        return Err(DatasetError::TooFewRatings {
            needed: MIN_SPLIT_RATINGS,
            got: n,
        });
    }
    let n_valid = n / 10;
    let n_test = n / 5;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut test_idx = order[..n_test].to_vec();
    let mut valid_idx = order[n_test..n_test + n_valid].to_vec();
    let mut train_idx = order[n_test + n_valid..].to_vec();
    let pick = |idx: &mut Vec<usize>| {
        idx.sort_unstable();
        idx.iter()
            .map(|&k| d.ratings()[k].clone())
            .collect::<Vec<_>>()
    };

    Ok(Split {
        train: pick(&mut train_idx),
        validation: pick(&mut valid_idx),
        test: pick(&mut test_idx),
        seed,
    })
}

/// Writes `<prefix>.train.tsv`, `<prefix>.valid.tsv`, `<prefix>.test.tsv` and
/// `manifest.json` into `dir`.
pub fn write_split(split: &Split, dir: &Path, prefix: &str) -> Result<SplitManifest, DatasetError> {
    let name = |suffix: &str| format!("{prefix}.{suffix}.tsv");
    let manifest = SplitManifest {
        seed: split.seed,
        train: split.train.len(),
        validation: split.validation.len(),
        test: split.test.len(),
        train_file: name("train"),
        validation_file: name("valid"),
        test_file: name("test"),
    };
    save_ratings(&dir.join(&manifest.train_file), &split.train)?;
    save_ratings(&dir.join(&manifest.validation_file), &split.validation)?;
    save_ratings(&dir.join(&manifest.test_file), &split.test)?;
    let path: PathBuf = dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&path, json).map_err(|source| DatasetError::Io { path, source })?;
    Ok(manifest)
}
