//! Users, venues, graded ratings and the relevant/irrelevant partition
//! derived from them.
//!
//! A rating of at least [`DEFAULT_POSITIVE_THRESHOLD`] marks a venue as
//! relevant for the user; anything below is irrelevant.

mod io;
mod split;
mod synth;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_dataset, load_ratings, load_venues, save_ratings, save_venues};
pub use split::{split_dataset, write_split, Split, SplitManifest};
pub use synth::{generate_synthetic, generate_synthetic_with, Planted, SyntheticConfig};

/// Ratings at or above this value are positive feedback.
pub const DEFAULT_POSITIVE_THRESHOLD: u8 = 4;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("rating {value} for ({user}, {venue}) is outside 1..=5")]
    RatingOutOfRange {
        user: String,
        venue: String,
        value: i64,
    },
    #[error("duplicate rating for ({user}, {venue})")]
    DuplicateRating { user: String, venue: String },
    #[error("rating references unknown venue {0:?}")]
    UnknownVenue(String),
    #[error("rating references unknown user {0:?}")]
    UnknownUser(String),
    #[error("venue {id:?} has coordinates ({lat}, {lon}) out of range")]
    CoordinateOutOfRange { id: String, lat: f64, lon: f64 },
    #[error("duplicate venue id {0:?}")]
    DuplicateVenue(String),
    #[error("empty identifier")]
    EmptyId,
    #[error("venue {0:?} has a review with empty text")]
    EmptyReview(String),
    #[error("need at least {needed} ratings to split, got {got}")]
    TooFewRatings { needed: usize, got: usize },
    #[error("invalid synthetic configuration: {0}")]
    InvalidSynthetic(String),
}

/// Opaque, non-empty user identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Result<Self, DatasetError> {
        let id = id.into();
        if id.is_empty() {
            return Err(DatasetError::EmptyId);
        }
        Ok(UserId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for UserId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub text: String,
    pub polarity: Polarity,
}

/// Multiset of category labels. Repeated labels accumulate counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryBag(BTreeMap<String, u32>);

impl CategoryBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, label: impl Into<String>, count: u32) {
        if count > 0 {
            *self.0.entry(label.into()).or_insert(0) += count;
        }
    }

    pub fn count(&self, label: &str) -> u32 {
        self.0.get(label).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Labels expanded by their counts, in label order.
    pub fn to_labels(&self) -> Vec<String> {
        self.0
            .iter()
            .flat_map(|(k, &v)| std::iter::repeat_n(k.clone(), v as usize))
            .collect()
    }
}

impl<S: Into<String>> FromIterator<S> for CategoryBag {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut bag = CategoryBag::new();
        for label in iter {
            bag.add(label, 1);
        }
        bag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Venue {
    pub id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub categories: CategoryBag,
    pub reviews: Vec<Review>,
}

impl Venue {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.id.is_empty() {
            return Err(DatasetError::EmptyId);
        }
        let lat_ok = self.latitude.is_finite() && (-90.0..=90.0).contains(&self.latitude);
        let lon_ok = self.longitude.is_finite() && (-180.0..=180.0).contains(&self.longitude);
        if !lat_ok || !lon_ok {
            return Err(DatasetError::CoordinateOutOfRange {
                id: self.id.clone(),
                lat: self.latitude,
                lon: self.longitude,
            });
        }
        if self.reviews.iter().any(|r| r.text.trim().is_empty()) {
            return Err(DatasetError::EmptyReview(self.id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rating {
    pub user: UserId,
    pub venue: String,
    pub value: u8,
}

/// Validated ratings plus venue metadata.
///
/// Users are indexed in order of first appearance in the ratings, venues in
/// the order they were supplied. `positive[i]` and `negative[i]` hold sorted
/// venue indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    users: Vec<UserId>,
    user_index: HashMap<UserId, usize>,
    venues: Vec<Venue>,
    venue_index: HashMap<String, usize>,
    ratings: Vec<Rating>,
    positive: Vec<Vec<usize>>,
    negative: Vec<Vec<usize>>,
    threshold: u8,
}

impl Dataset {
    pub fn new(venues: Vec<Venue>, ratings: Vec<Rating>) -> Result<Self, DatasetError> {
        Self::with_threshold(venues, ratings, DEFAULT_POSITIVE_THRESHOLD)
    }

    pub fn with_threshold(
        venues: Vec<Venue>,
        ratings: Vec<Rating>,
        threshold: u8,
    ) -> Result<Self, DatasetError> {
        let mut users = Vec::new();
        let mut seen = HashSet::new();
        for r in &ratings {
            if seen.insert(r.user.clone()) {
                users.push(r.user.clone());
            }
        }
        Self::assemble(users, venues, ratings, threshold)
    }

    /// Same users and venues, different ratings. Used to restrict a dataset
    /// to one part of a split while keeping every index stable.
    pub fn with_ratings(&self, ratings: Vec<Rating>) -> Result<Self, DatasetError> {
        for r in &ratings {
            if !self.user_index.contains_key(&r.user) {
                return Err(DatasetError::UnknownUser(r.user.to_string()));
            }
        }
        Self::assemble(
            self.users.clone(),
            self.venues.clone(),
            ratings,
            self.threshold,
        )
    }

    fn assemble(
        users: Vec<UserId>,
        venues: Vec<Venue>,
        ratings: Vec<Rating>,
        threshold: u8,
    ) -> Result<Self, DatasetError> {
        let mut venue_index = HashMap::with_capacity(venues.len());
        for (j, v) in venues.iter().enumerate() {
            v.validate()?;
            if venue_index.insert(v.id.clone(), j).is_some() {
                return Err(DatasetError::DuplicateVenue(v.id.clone()));
            }
        }
        let user_index: HashMap<UserId, usize> = users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();

        let mut positive = vec![Vec::new(); users.len()];
        let mut negative = vec![Vec::new(); users.len()];
        let mut pairs = HashSet::with_capacity(ratings.len());
        for r in &ratings {
            if !(1..=5).contains(&r.value) {
                return Err(DatasetError::RatingOutOfRange {
                    user: r.user.to_string(),
                    venue: r.venue.clone(),
                    value: r.value as i64,
                });
            }
            let j = *venue_index
                .get(&r.venue)
                .ok_or_else(|| DatasetError::UnknownVenue(r.venue.clone()))?;
            let i = *user_index
                .get(&r.user)
                .ok_or_else(|| DatasetError::UnknownUser(r.user.to_string()))?;
            if !pairs.insert((i, j)) {
                return Err(DatasetError::DuplicateRating {
                    user: r.user.to_string(),
                    venue: r.venue.clone(),
                });
            }
            if r.value >= threshold {
                positive[i].push(j);
            } else {
                negative[i].push(j);
            }
        }
        for set in positive.iter_mut().chain(negative.iter_mut()) {
            set.sort_unstable();
        }

        Ok(Dataset {
            users,
            user_index,
            venues,
            venue_index,
            ratings,
            positive,
            negative,
            threshold,
        })
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn venues(&self) -> &[Venue] {
        &self.venues
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_venues(&self) -> usize {
        self.venues.len()
    }

    pub fn threshold(&self) -> u8 {
        self.threshold
    }

    pub fn user_idx(&self, user: &UserId) -> Option<usize> {
        self.user_index.get(user).copied()
    }

    pub fn venue_idx(&self, venue: &str) -> Option<usize> {
        self.venue_index.get(venue).copied()
    }

    /// Relevant venue indices of user `i`.
    pub fn positive(&self, i: usize) -> &[usize] {
        &self.positive[i]
    }

    /// Irrelevant venue indices of user `i`.
    pub fn negative(&self, i: usize) -> &[usize] {
        &self.negative[i]
    }

    pub fn is_relevant(&self, value: u8) -> bool {
        value >= self.threshold
    }
}
