//! Ordinal fusion of two rankings of the same venues:
//! `Rk = beta * Rk_S + (1 - beta) * Rk_L`, lower is better.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::ranking::RankedList;

pub const DEFAULT_BETA: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum HybridError {
    #[error("beta {0} is outside [0, 1]")]
    BadBeta(f64),
    #[error("user mismatch: {0:?} vs {1:?}")]
    UserMismatch(String, String),
    #[error("venue {venue:?} of user {user:?} is ranked by only one input")]
    Coverage { user: String, venue: String },
    #[error("user {0:?} is ranked by only one input")]
    MissingUser(String),
    #[error("ranking for {user:?} repeats venue {venue:?}")]
    Duplicate { user: String, venue: String },
}

/// Venue to 1-based ordinal position for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalRanking {
    pub user: String,
    pub positions: BTreeMap<String, usize>,
}

impl OrdinalRanking {
    pub fn from_list(list: &RankedList) -> Result<Self, HybridError> {
        let mut positions = BTreeMap::new();
        for (p, venue) in list.venues().enumerate() {
            if positions.insert(venue.to_string(), p + 1).is_some() {
                return Err(HybridError::Duplicate {
                    user: list.user.clone(),
                    venue: venue.to_string(),
                });
            }
        }
        Ok(OrdinalRanking {
            user: list.user.clone(),
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Combined ordinals sorted ascending, ties by venue id. The entry scores are
/// the combined ordinals.
pub fn fuse(
    rk_s: &OrdinalRanking,
    rk_l: &OrdinalRanking,
    beta: f64,
) -> Result<RankedList, HybridError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(HybridError::BadBeta(beta));
    }
    if rk_s.user != rk_l.user {
        return Err(HybridError::UserMismatch(
            rk_s.user.clone(),
            rk_l.user.clone(),
        ));
    }
    let missing = |a: &OrdinalRanking, b: &OrdinalRanking| {
        a.positions
            .keys()
            .find(|v| !b.positions.contains_key(*v))
            .map(|v| HybridError::Coverage {
                user: a.user.clone(),
                venue: v.clone(),
            })
    };
    if let Some(e) = missing(rk_s, rk_l).or_else(|| missing(rk_l, rk_s)) {
        return Err(e);
    }

    let mut combined: Vec<(String, f64)> = rk_s
        .positions
        .iter()
        .map(|(venue, &ps)| {
            let pl = rk_l.positions[venue];
            (venue.clone(), beta * ps as f64 + (1.0 - beta) * pl as f64)
        })
        .collect();
    combined.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(RankedList::from_ordered(rk_s.user.clone(), combined))
}

/// Fuses two sets of per-user rankings. Both must cover the same users.
pub fn fuse_all(
    primary: &[RankedList],
    external: &[RankedList],
    beta: f64,
) -> Result<Vec<RankedList>, HybridError> {
    let ext: HashMap<&str, &RankedList> = external.iter().map(|l| (l.user.as_str(), l)).collect();
    if let Some(l) = external
        .iter()
        .find(|l| !primary.iter().any(|p| p.user == l.user))
    {
        return Err(HybridError::MissingUser(l.user.clone()));
    }
    primary
        .iter()
        .map(|p| {
            let e = ext
                .get(p.user.as_str())
                .ok_or_else(|| HybridError::MissingUser(p.user.clone()))?;
            fuse(
                &OrdinalRanking::from_list(p)?,
                &OrdinalRanking::from_list(e)?,
                beta,
            )
        })
        .collect()
}
