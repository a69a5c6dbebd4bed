//! Planted-cluster data generator.
//!
//! Venues and users belong to latent clusters. Venues of one cluster sit
//! around a shared geographic center, carry the cluster's dominant category
//! and are reviewed with cluster-specific vocabulary. Users mostly like
//! venues of their own cluster and dislike the others.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CategoryBag, Dataset, DatasetError, Polarity, Rating, Review, UserId, Venue};

const SHARED_CATEGORIES: [&str; 4] = ["food", "outdoor", "nightlife", "family"];
const POSITIVE_WORDS: [&str; 6] = ["great", "lovely", "excellent", "friendly", "tasty", "cozy"];
const NEGATIVE_WORDS: [&str; 6] = ["awful", "rude", "dirty", "bland", "slow", "noisy"];
const FILLER: [&str; 5] = ["the", "place", "was", "we", "visited"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub m_venues: usize,
    pub n_clusters: usize,
    pub seed: u64,
    /// Ratings drawn per user, capped at the number of venues.
    pub ratings_per_user: usize,
    /// Share of a user's ratings taken from the home cluster.
    pub home_share: f64,
    /// Probability that a rating contradicts the planted preference.
    pub noise: f64,
    pub reviews_per_venue: usize,
    /// Venue scatter around the cluster center, in degrees.
    pub radius_deg: f64,
}

impl SyntheticConfig {
    pub fn new(n_users: usize, m_venues: usize, n_clusters: usize, seed: u64) -> Self {
        SyntheticConfig {
            n_users,
            m_venues,
            n_clusters,
            seed,
            ratings_per_user: 30,
            home_share: 0.5,
            noise: 0.15,
            reviews_per_venue: 6,
            radius_deg: 0.02,
        }
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let bad = |msg: &str| Err(DatasetError::InvalidSynthetic(msg.to_string()));
        if self.n_clusters < 1 {
            return bad("n_clusters must be at least 1");
        }
        if self.n_users < self.n_clusters || self.m_venues < self.n_clusters {
            return bad("n_users and m_venues must be at least n_clusters");
        }
        if !(0.0..=1.0).contains(&self.home_share) || !(0.0..=1.0).contains(&self.noise) {
            return bad("home_share and noise must lie in [0, 1]");
        }
        if !(self.radius_deg >= 0.0 && self.radius_deg < 1.0) {
            return bad("radius_deg must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Generated data plus the planted memberships.
#[derive(Debug, Clone)]
pub struct Planted {
    pub dataset: Dataset,
    pub user_clusters: Vec<usize>,
    pub venue_clusters: Vec<usize>,
}

pub fn generate_synthetic(
    n_users: usize,
    m_venues: usize,
    n_clusters: usize,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    generate_synthetic_with(&SyntheticConfig::new(n_users, m_venues, n_clusters, seed))
        .map(|p| p.dataset)
}

pub fn generate_synthetic_with(cfg: &SyntheticConfig) -> Result<Planted, DatasetError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let centers = cluster_centers(cfg.n_clusters, &mut rng);

    let venue_clusters: Vec<usize> = (0..cfg.m_venues).map(|j| j % cfg.n_clusters).collect();
    let user_clusters: Vec<usize> = (0..cfg.n_users).map(|i| i % cfg.n_clusters).collect();

    let mut venues = Vec::with_capacity(cfg.m_venues);
    for (j, &c) in venue_clusters.iter().enumerate() {
        let (clat, clon) = centers[c];
        let lat = (clat + rng.gen_range(-cfg.radius_deg..=cfg.radius_deg)).clamp(-90.0, 90.0);
        let lon = (clon + rng.gen_range(-cfg.radius_deg..=cfg.radius_deg)).clamp(-180.0, 180.0);

        let mut categories = CategoryBag::new();
        categories.add(format!("category{c}"), 1);
        if rng.gen_bool(0.5) {
            categories.add(*SHARED_CATEGORIES.choose(&mut rng).unwrap(), 1);
        }

        let reviews = (0..cfg.reviews_per_venue)
            .map(|r| {
                // the first two reviews guarantee both polarities
                let positive = match r {
                    0 => true,
                    1 => false,
                    _ => rng.gen_bool(0.5),
                };
                review(c, positive, &mut rng)
            })
            .collect();

        venues.push(Venue {
            id: format!("v{j:04}"),
            latitude: lat,
            longitude: lon,
            categories,
            reviews,
        });
    }

    let per_user = cfg.ratings_per_user.min(cfg.m_venues);
    let mut ratings = Vec::with_capacity(cfg.n_users * per_user);
    for (i, &home) in user_clusters.iter().enumerate() {
        let (inside, outside): (Vec<usize>, Vec<usize>) =
            (0..cfg.m_venues).partition(|&j| venue_clusters[j] == home);
        let want_in = ((per_user as f64 * cfg.home_share).round() as usize).min(inside.len());
        let want_out = (per_user - want_in).min(outside.len());

        let mut picked: Vec<(usize, bool)> = inside
            .choose_multiple(&mut rng, want_in)
            .map(|&j| (j, true))
            .chain(
                outside
                    .choose_multiple(&mut rng, want_out)
                    .map(|&j| (j, false)),
            )
            .collect();
        picked.sort_unstable();

        let user = UserId::new(format!("u{i:04}"))?;
        for (j, home_venue) in picked {
            let flip = rng.gen_bool(cfg.noise);
            let liked = home_venue != flip;
            let value = if liked {
                rng.gen_range(4..=5)
            } else {
                rng.gen_range(1..=3)
            };
            ratings.push(Rating {
                user: user.clone(),
                venue: venues[j].id.clone(),
                value,
            });
        }
    }

    Ok(Planted {
        dataset: Dataset::new(venues, ratings)?,
        user_clusters,
        venue_clusters,
    })
}

/// Centers at least 2 degrees apart in latitude or longitude.
fn cluster_centers(k: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let mut centers: Vec<(f64, f64)> = Vec::with_capacity(k);
    while centers.len() < k {
        let cand = (rng.gen_range(-60.0..60.0), rng.gen_range(-170.0..170.0));
        let far = centers
            .iter()
            .all(|&(a, b): &(f64, f64)| (a - cand.0).abs() > 2.0 || (b - cand.1).abs() > 2.0);
        if far {
            centers.push(cand);
        }
    }
    centers
}

fn review(cluster: usize, positive: bool, rng: &mut ChaCha8Rng) -> Review {
    let mut words: Vec<String> = Vec::with_capacity(8);
    words.push(FILLER.choose(rng).unwrap().to_string());
    for _ in 0..3 {
        words.push(format!("topic{cluster}w{}", rng.gen_range(0..8)));
    }
    let pool = if positive {
        &POSITIVE_WORDS
    } else {
        &NEGATIVE_WORDS
    };
    for _ in 0..2 {
        words.push(pool.choose(rng).unwrap().to_string());
    }
    words.push(FILLER.choose(rng).unwrap().to_string());
    Review {
        text: words.join(" "),
        polarity: if positive {
            Polarity::Positive
        } else {
            Polarity::Negative
        },
    }
}
