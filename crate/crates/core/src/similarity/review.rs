//! Per-venue linear classifiers separating a venue's positive reviews from its
//! negative ones, and the review-based similarity derived from their
//! decision values.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::text::{SparseVec, TextConfig, TfIdf};
use crate::dataset::{Dataset, Polarity, Venue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewClassifier {
    pub venue: usize,
    /// Non-zero weights sorted by token index.
    pub weights: SparseVec,
    pub bias: f64,
    /// Set when the venue lacks reviews of one polarity; such a classifier
    /// scores everything 0.
    pub degenerate: bool,
}

impl ReviewClassifier {
    pub fn degenerate(venue: usize) -> Self {
        ReviewClassifier {
            venue,
            weights: Vec::new(),
            bias: 0.0,
            degenerate: true,
        }
    }

    pub fn decision(&self, x: &[(u32, f64)]) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        // both sides sorted by index: merge
        let (mut a, mut b, mut dot) = (0, 0, 0.0);
        while a < self.weights.len() && b < x.len() {
            match self.weights[a].0.cmp(&x[b].0) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    dot += self.weights[a].1 * x[b].1;
                    a += 1;
                    b += 1;
                }
            }
        }
        dot + self.bias
    }
}

/// Fits a hinge-loss linear model with L2 penalty by stochastic subgradient
/// descent over venue `i`'s reviews.
pub fn train_review_classifier(
    i: usize,
    venue: &Venue,
    vectorizer: &TfIdf,
    cfg: &TextConfig,
) -> ReviewClassifier {
    let samples: Vec<(SparseVec, f64)> = venue
        .reviews
        .iter()
        .map(|r| {
            let y = match r.polarity {
                Polarity::Positive => 1.0,
                Polarity::Negative => -1.0,
            };
            (vectorizer.transform(&r.text), y)
        })
        .collect();
    let has_pos = samples.iter().any(|s| s.1 > 0.0);
    let has_neg = samples.iter().any(|s| s.1 < 0.0);
    if !has_pos || !has_neg {
        return ReviewClassifier::degenerate(i);
    }

    // w = scale * raw, so the L2 shrink is O(1) per step
    let mut raw = vec![0.0f64; vectorizer.len()];
    let mut scale = 1.0f64;
    let mut bias = 0.0f64;
    let mut t = 0usize;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(i as u64);
    let mut order: Vec<usize> = (0..samples.len()).collect();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &s in &order {
            let (x, y) = &samples[s];
            let eta = cfg.eta0 / (1.0 + cfg.eta0 * cfg.l2 * t as f64);
            let wx: f64 = x.iter().map(|&(k, v)| raw[k as usize] * v).sum::<f64>() * scale;
            let margin = y * (wx + bias);

            scale *= 1.0 - eta * cfg.l2;
            if margin < 1.0 {
                for &(k, v) in x {
                    raw[k as usize] += eta * y * v / scale;
                }
                bias += eta * y;
            }
            if scale < 1e-9 {
                for r in &mut raw {
                    *r *= scale;
                }
                scale = 1.0;
            }
            t += 1;
        }
    }

    let weights = raw
        .iter()
        .enumerate()
        .filter(|(_, &r)| r != 0.0)
        .map(|(k, &r)| (k as u32, r * scale))
        .collect();
    ReviewClassifier {
        venue: i,
        weights,
        bias,
        degenerate: false,
    }
}

/// Mean decision value of `clf` over all of `b`'s reviews, clipped to
/// `[-clip, clip]`. Degenerate classifiers and review-less venues give 0.
pub fn review_similarity(clf: &ReviewClassifier, b: &Venue, vectorizer: &TfIdf, clip: f64) -> f64 {
    if clf.degenerate || b.reviews.is_empty() {
        return 0.0;
    }
    let features: Vec<SparseVec> = b
        .reviews
        .iter()
        .map(|r| vectorizer.transform(&r.text))
        .collect();
    mean_decision(clf, &features, clip)
}

pub(crate) fn mean_decision(clf: &ReviewClassifier, features: &[SparseVec], clip: f64) -> f64 {
    if clf.degenerate || features.is_empty() {
        return 0.0;
    }
    let mean = features.iter().map(|x| clf.decision(x)).sum::<f64>() / features.len() as f64;
    mean.clamp(-clip, clip)
}

/// Vectorizer fitted on every review of every venue, plus one classifier per venue.
#[derive(Debug, Clone, PartialEq)]
pub struct ReviewModel {
    pub vectorizer: TfIdf,
    pub classifiers: Vec<ReviewClassifier>,
}

impl ReviewModel {
    pub fn fit(d: &Dataset, cfg: &TextConfig) -> Self {
        let corpus = d
            .venues()
            .iter()
            .flat_map(|v| v.reviews.iter().map(|r| r.text.as_str()));
        let vectorizer = TfIdf::fit(corpus, cfg);
        let classifiers = d
            .venues()
            .iter()
            .enumerate()
            .map(|(i, v)| train_review_classifier(i, v, &vectorizer, cfg))
            .collect();
        ReviewModel {
            vectorizer,
            classifiers,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoryBag, Review};

    fn venue(reviews: &[(&str, bool)]) -> Venue {
        Venue {
            id: "v".into(),
            latitude: 0.0,
            longitude: 0.0,
            categories: CategoryBag::new(),
            reviews: reviews
                .iter()
                .map(|&(t, p)| Review {
                    text: t.into(),
                    polarity: if p {
                        Polarity::Positive
                    } else {
                        Polarity::Negative
                    },
                })
                .collect(),
        }
    }

    fn separable() -> Venue {
        venue(&[
            ("the pizza was great", true),
            ("great service and pizza", true),
            ("pizza with friends great evening", true),
            ("the pizza was awful", false),
            ("awful service and pizza", false),
        ])
    }

    fn fit(v: &Venue) -> (TfIdf, ReviewClassifier) {
        let cfg = TextConfig::default();
        let tfidf = TfIdf::fit(v.reviews.iter().map(|r| r.text.as_str()), &cfg);
        let clf = train_review_classifier(0, v, &tfidf, &cfg);
        (tfidf, clf)
    }

    #[test]
    fn separates_training_reviews() {
        let v = separable();
        let (tfidf, clf) = fit(&v);
        assert!(!clf.degenerate);
        for r in &v.reviews {
            let s = clf.decision(&tfidf.transform(&r.text));
            match r.polarity {
                Polarity::Positive => assert!(s > 0.0, "{} -> {s}", r.text),
                Polarity::Negative => assert!(s < 0.0, "{} -> {s}", r.text),
            }
        }
        assert!(clf.decision(&[]).is_finite());
    }

    #[test]
    fn own_positive_reviews_score_non_negative() {
        let v = separable();
        let (tfidf, clf) = fit(&v);
        let positives = venue(&[
            ("the pizza was great", true),
            ("great service and pizza", true),
            ("pizza with friends great evening", true),
        ]);
        assert!(review_similarity(&clf, &positives, &tfidf, 3.0) >= 0.0);
    }

    #[test]
    fn degenerate_paths() {
        let (tfidf, _) = fit(&separable());
        let none = venue(&[]);
        assert!(train_review_classifier(3, &none, &tfidf, &TextConfig::default()).degenerate);
        let one_sided = venue(&[("great", true), ("lovely", true)]);
        let clf = train_review_classifier(3, &one_sided, &tfidf, &TextConfig::default());
        assert!(clf.degenerate);
        assert_eq!(review_similarity(&clf, &separable(), &tfidf, 3.0), 0.0);

        let (tfidf, clf) = fit(&separable());
        assert_eq!(review_similarity(&clf, &none, &tfidf, 3.0), 0.0);
    }

    #[test]
    fn clipping() {
        let clf = ReviewClassifier {
            venue: 0,
            weights: vec![],
            bias: 7.2,
            degenerate: false,
        };
        assert_eq!(mean_decision(&clf, &[vec![]], 3.0), 3.0);
        let neg = ReviewClassifier { bias: -7.2, ..clf };
        assert_eq!(mean_decision(&neg, &[vec![]], 3.0), -3.0);
    }

    #[test]
    fn deterministic_fit() {
        let v = separable();
        assert_eq!(fit(&v).1, fit(&v).1);
    }
}
