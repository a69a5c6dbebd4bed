//! Reference implementations used as test oracles. They share no code with
//! the library beyond plain data types.
#![allow(dead_code)]

use std::path::PathBuf;

use crmls::dataset::{load_dataset, Dataset, Rating};
use crmls::similarity::{SimilarityKind, SimilarityMatrix, SimilarityStack};
use crmls::trainer::FactorMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture() -> Dataset {
    let dir = fixture_dir();
    load_dataset(&dir.join("ratings.tsv"), &dir.join("venues.jsonl")).unwrap()
}

/// Columns of a factor matrix as plain vectors.
pub fn columns(f: &FactorMatrix) -> Vec<Vec<f64>> {
    (0..f.count()).map(|c| f.col(c).to_vec()).collect()
}

/// Relevant and irrelevant venue indices per user, read straight from the ratings.
pub fn partition(d: &Dataset) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = vec![(Vec::new(), Vec::new()); d.n_users()];
    for r in d.ratings() {
        let i = d.users().iter().position(|u| *u == r.user).unwrap();
        let j = d.venues().iter().position(|v| v.id == r.venue).unwrap();
        if r.value >= d.threshold() {
            out[i].0.push(j);
        } else {
            out[i].1.push(j);
        }
    }
    out
}

fn ln1p_exp(x: f64) -> f64 {
    // log(1 + e^x), written differently from the library
    if x > 30.0 {
        x + (-x).exp()
    } else {
        (1.0 + x.exp()).ln()
    }
}

/// Term-by-term evaluation of the ranking objective plus `lambda/2` norms.
pub fn naive_objective(
    d: &Dataset,
    matrices: &[SimilarityMatrix],
    alphas: &[f64],
    lambda: f64,
    u: &[Vec<f64>],
    v: &[Vec<f64>],
) -> f64 {
    let mut total = 0.0;
    for (i, (pos, neg)) in partition(d).iter().enumerate() {
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let n_i = neg.len() as f64;
        let mut user_sum = 0.0;
        for &j in neg {
            let mut height = 0.0;
            for &k in pos {
                let mut delta = 0.0;
                for (z, s) in matrices.iter().enumerate() {
                    let w = alphas[z] / s.get(k, j).abs().exp();
                    for r in 0..u[i].len() {
                        delta += u[i][r] * w * (v[k][r] - v[j][r]);
                    }
                }
                height += ln1p_exp(-delta);
            }
            user_sum += height * height;
        }
        total += user_sum / n_i;
    }
    let mut norms = 0.0;
    for x in u.iter().chain(v.iter()).flatten() {
        norms += x * x;
    }
    total + lambda / 2.0 * norms
}

/// The draws a trainer seeded with `seed` starts from, column by column.
pub fn oracle_init(d: usize, n: usize, m: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let b = 1.0 / (d as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = |count: usize| -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| (0..d).map(|_| rng.gen_range(-b..=b)).collect())
            .collect()
    };
    let u = cols(n);
    let v = cols(m);
    (u, v)
}

/// Plain pairwise-logistic collaborative ranking: squared per-irrelevant-venue
/// sums of `log(1 + exp(-(s_k - s_j)))`, full-batch alternating descent.
pub struct PlainCr {
    pub pairs: Vec<(Vec<usize>, Vec<usize>)>,
    pub lambda: f64,
}

impl PlainCr {
    pub fn new(d: &Dataset, lambda: f64) -> Self {
        PlainCr {
            pairs: partition(d),
            lambda,
        }
    }

    fn score(u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn loss(&self, u: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (i, (pos, neg)) in self.pairs.iter().enumerate() {
            if pos.is_empty() || neg.is_empty() {
                continue;
            }
            for &j in neg {
                let h: f64 = pos
                    .iter()
                    .map(|&k| ln1p_exp(Self::score(&u[i], &v[j]) - Self::score(&u[i], &v[k])))
                    .sum();
                total += h * h / neg.len() as f64;
            }
        }
        let sq: f64 = u.iter().chain(v).flatten().map(|x| x * x).sum();
        total + 0.5 * self.lambda * sq
    }

    /// Returns (grad_u, grad_v) at `(u, v)`.
    pub fn grads(&self, u: &[Vec<f64>], v: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let dim = u[0].len();
        let mut gu: Vec<Vec<f64>> = u
            .iter()
            .map(|x| x.iter().map(|y| self.lambda * y).collect())
            .collect();
        let mut gv: Vec<Vec<f64>> = v
            .iter()
            .map(|x| x.iter().map(|y| self.lambda * y).collect())
            .collect();
        for (i, (pos, neg)) in self.pairs.iter().enumerate() {
            if pos.is_empty() || neg.is_empty() {
                continue;
            }
            let n = neg.len() as f64;
            for &j in neg {
                let margins: Vec<f64> = pos
                    .iter()
                    .map(|&k| Self::score(&u[i], &v[k]) - Self::score(&u[i], &v[j]))
                    .collect();
                let h: f64 = margins.iter().map(|&m| ln1p_exp(-m)).sum();
                for (&k, &m) in pos.iter().zip(&margins) {
                    // d/dm of log(1 + e^-m) is -1 / (1 + e^m)
                    let c = 2.0 * h / n * (-1.0 / (1.0 + m.exp()));
                    for r in 0..dim {
                        gu[i][r] += c * (v[k][r] - v[j][r]);
                        gv[k][r] += c * u[i][r];
                        gv[j][r] -= c * u[i][r];
                    }
                }
            }
        }
        (gu, gv)
    }

    /// Loss before training and after each of `iters` alternating steps.
    pub fn trace(
        &self,
        mut u: Vec<Vec<f64>>,
        mut v: Vec<Vec<f64>>,
        gamma: f64,
        iters: usize,
    ) -> Vec<f64> {
        let mut out = vec![self.loss(&u, &v)];
        for _ in 0..iters {
            let (gu, _) = self.grads(&u, &v);
            for (x, g) in u.iter_mut().flatten().zip(gu.iter().flatten()) {
                *x -= gamma * g;
            }
            let (_, gv) = self.grads(&u, &v);
            for (x, g) in v.iter_mut().flatten().zip(gv.iter().flatten()) {
                *x -= gamma * g;
            }
            out.push(self.loss(&u, &v));
        }
        out
    }
}

/// Central angle through the chord of the two unit vectors.
pub fn haversine_oracle(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    let unit = |lat: f64, lon: f64| {
        let (p, l) = (lat.to_radians(), lon.to_radians());
        [p.cos() * l.cos(), p.cos() * l.sin(), p.sin()]
    };
    let (a, b) = (unit(lat_a, lon_a), unit(lat_b, lon_b));
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
    let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    sin.atan2(cos)
}

pub fn geo_oracle(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    1.0 / (1.0 + 6371.0 * haversine_oracle(lat_a, lon_a, lat_b, lon_b))
}

/// A random problem: ratings, custom similarity matrices with values in
/// `[-3, 1]`, weights and factors.
pub struct RandomInstance {
    pub dataset: Dataset,
    pub matrices: Vec<SimilarityMatrix>,
    pub alphas: Vec<f64>,
    pub users: FactorMatrix,
    pub venues: FactorMatrix,
}

pub fn random_instance(seed: u64, n: usize, m: usize, d: usize) -> RandomInstance {
    use crmls::dataset::{CategoryBag, UserId, Venue};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let venues: Vec<Venue> = (0..m)
        .map(|j| Venue {
            id: format!("v{j:02}"),
            latitude: rng.gen_range(-60.0..60.0),
            longitude: rng.gen_range(-170.0..170.0),
            categories: CategoryBag::new(),
            reviews: vec![],
        })
        .collect();
    let mut ratings = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if rng.gen_bool(0.6) {
                ratings.push(Rating {
                    user: UserId::new(format!("u{i}")).unwrap(),
                    venue: format!("v{j:02}"),
                    value: rng.gen_range(1..=5),
                });
            }
        }
    }
    let dataset = Dataset::new(venues, ratings).unwrap();
    let n = dataset.n_users();
    let n_mats = rng.gen_range(1..=3);
    let matrices = (0..n_mats)
        .map(|_| {
            let vals = (0..m * m).map(|_| rng.gen_range(-3.0..1.0)).collect();
            SimilarityMatrix::new(SimilarityKind::Custom, m, vals).unwrap()
        })
        .collect();
    let alphas = (0..n_mats).map(|_| rng.gen_range(0.1..1.0)).collect();
    let cols = |rng: &mut ChaCha8Rng, count: usize| -> FactorMatrix {
        let c: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        FactorMatrix::from_columns(d, &c).unwrap()
    };
    let users = cols(&mut rng, n);
    let venues = cols(&mut rng, m);
    RandomInstance {
        dataset,
        matrices,
        alphas,
        users,
        venues,
    }
}

impl RandomInstance {
    pub fn stack(&self) -> SimilarityStack {
        SimilarityStack::new(self.matrices.clone(), self.alphas.clone()).unwrap()
    }
}

/// Largest violation of `|a - b| <= rel * max(|a|, |b|) + abs` over paired values;
/// zero means every pair agrees.
pub fn worst_violation(a: &[f64], b: &[f64], rel: f64, abs: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y).abs() - (rel * x.abs().max(y.abs()) + abs)).max(0.0))
        .fold(0.0, f64::max)
}
