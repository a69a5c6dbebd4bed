use crate::dataset::Dataset;
use crate::similarity::SimilarityStack;

use super::model::{dot, FactorMatrix};
use super::{Hyperparams, TrainError};

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(x))`, the magnitude of the derivative of `softplus(-x)`.
pub fn sigmoid_neg(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Similarity-attenuated margin of relevant venue `k` over irrelevant venue
/// `j`: `u . sum_z alpha_z (v_k - v_j) / exp(|S_z(k, j)|)`.
pub fn delta(
    u: &[f64],
    v_k: &[f64],
    v_j: &[f64],
    stack: &SimilarityStack,
    k: usize,
    j: usize,
) -> f64 {
    let margin: f64 = u
        .iter()
        .zip(v_k.iter().zip(v_j))
        .map(|(a, (b, c))| a * (b - c))
        .sum();
    stack.pair_weight(k, j) * margin
}

/// Everything one user contributes to the objective.
#[derive(Debug, Clone, Copy)]
pub struct PairwiseLossContext<'a> {
    pub user: usize,
    pub relevant: &'a [usize],
    pub irrelevant: &'a [usize],
    /// Number of irrelevant venues, or 1 when there are none.
    pub normalizer: f64,
    pub stack: &'a SimilarityStack,
}

impl<'a> PairwiseLossContext<'a> {
    pub fn new(d: &'a Dataset, user: usize, stack: &'a SimilarityStack) -> Self {
        let irrelevant = d.negative(user);
        PairwiseLossContext {
            user,
            relevant: d.positive(user),
            irrelevant,
            normalizer: irrelevant.len().max(1) as f64,
            stack,
        }
    }

    pub fn is_active(&self) -> bool {
        !self.relevant.is_empty() && !self.irrelevant.is_empty()
    }
}

/// `sum_{k relevant} log(1 + exp(-delta(k, j)))`.
pub fn surrogate_height(
    ctx: &PairwiseLossContext<'_>,
    j: usize,
    users: &FactorMatrix,
    venues: &FactorMatrix,
) -> f64 {
    let u = users.col(ctx.user);
    ctx.relevant
        .iter()
        .map(|&k| softplus(-delta(u, venues.col(k), venues.col(j), ctx.stack, k, j)))
        .sum()
}

/// Objective with weights `hp.alphas` applied to `stack`, regularized by
/// `hp.lambda / 2 * (|U|^2 + |V|^2)`.
pub fn objective(
    users: &FactorMatrix,
    venues: &FactorMatrix,
    dataset: &Dataset,
    stack: &SimilarityStack,
    hp: &Hyperparams,
) -> Result<f64, TrainError> {
    let p = Problem::new(dataset, stack, &hp.alphas, hp.lambda)?;
    p.check(users, venues)?;
    Ok(p.objective(users, venues))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub users: FactorMatrix,
    pub venues: FactorMatrix,
}

pub fn gradients(
    users: &FactorMatrix,
    venues: &FactorMatrix,
    dataset: &Dataset,
    stack: &SimilarityStack,
    hp: &Hyperparams,
) -> Result<Gradients, TrainError> {
    let p = Problem::new(dataset, stack, &hp.alphas, hp.lambda)?;
    p.check(users, venues)?;
    Ok(Gradients {
        users: p.user_gradients(users, venues),
        venues: p.venue_gradients(users, venues),
    })
}

struct UserTerms {
    relevant: Vec<usize>,
    irrelevant: Vec<usize>,
    /// Pair weights, row `a` for `relevant[a]`, column `b` for `irrelevant[b]`.
    weights: Vec<f64>,
    normalizer: f64,
}

/// Training problem with the similarity weights of every rated
/// (relevant, irrelevant) pair precomputed.
pub struct Problem {
    n: usize,
    m: usize,
    terms: Vec<Option<UserTerms>>,
    lambda: f64,
}

impl Problem {
    pub fn new(
        dataset: &Dataset,
        stack: &SimilarityStack,
        alphas: &[f64],
        lambda: f64,
    ) -> Result<Self, TrainError> {
        if stack.size() != dataset.n_venues() {
            return Err(TrainError::Shape(format!(
                "similarity matrices are {0}x{0} but the dataset has {1} venues",
                stack.size(),
                dataset.n_venues()
            )));
        }
        let stack = stack.reweighted(alphas.to_vec())?;
        let terms = (0..dataset.n_users())
            .map(|i| {
                let ctx = PairwiseLossContext::new(dataset, i, &stack);
                ctx.is_active().then(|| {
                    let mut weights = Vec::with_capacity(ctx.relevant.len() * ctx.irrelevant.len());
                    for &k in ctx.relevant {
                        for &j in ctx.irrelevant {
                            weights.push(stack.pair_weight(k, j));
                        }
                    }
                    UserTerms {
                        relevant: ctx.relevant.to_vec(),
                        irrelevant: ctx.irrelevant.to_vec(),
                        weights,
                        normalizer: ctx.normalizer,
                    }
                })
            })
            .collect();
        Ok(Problem {
            n: dataset.n_users(),
            m: dataset.n_venues(),
            terms,
            lambda,
        })
    }

    pub fn check(&self, users: &FactorMatrix, venues: &FactorMatrix) -> Result<(), TrainError> {
        if users.count() != self.n || venues.count() != self.m || users.dim() != venues.dim() {
            return Err(TrainError::Shape(format!(
                "expected U: d x {} and V: d x {}, got {}x{} and {}x{}",
                self.n,
                self.m,
                users.dim(),
                users.count(),
                venues.dim(),
                venues.count()
            )));
        }
        Ok(())
    }

    pub fn objective(&self, users: &FactorMatrix, venues: &FactorMatrix) -> f64 {
        let mut total = 0.0;
        for (i, t) in self.terms.iter().enumerate() {
            let Some(t) = t else { continue };
            let u = users.col(i);
            let pos: Vec<f64> = t.relevant.iter().map(|&k| dot(u, venues.col(k))).collect();
            let neg: Vec<f64> = t
                .irrelevant
                .iter()
                .map(|&j| dot(u, venues.col(j)))
                .collect();
            let nb = neg.len();
            let mut user_loss = 0.0;
            for (b, &sj) in neg.iter().enumerate() {
                let h: f64 = pos
                    .iter()
                    .enumerate()
                    .map(|(a, &sk)| softplus(-t.weights[a * nb + b] * (sk - sj)))
                    .sum();
                user_loss += h * h;
            }
            total += user_loss / t.normalizer;
        }
        total + 0.5 * self.lambda * (users.squared_norm() + venues.squared_norm())
    }

    /// Calls `f(i, k, j, c)` for every active pair, where `c` is the
    /// derivative of the objective with respect to the raw score margin
    /// `u_i . (v_k - v_j)`.
    fn for_each_pair(
        &self,
        users: &FactorMatrix,
        venues: &FactorMatrix,
        mut f: impl FnMut(usize, usize, usize, f64),
    ) {
        for (i, t) in self.terms.iter().enumerate() {
            let Some(t) = t else { continue };
            let u = users.col(i);
            let pos: Vec<f64> = t.relevant.iter().map(|&k| dot(u, venues.col(k))).collect();
            let neg: Vec<f64> = t
                .irrelevant
                .iter()
                .map(|&j| dot(u, venues.col(j)))
                .collect();
            let nb = neg.len();
            for (b, &sj) in neg.iter().enumerate() {
                let h: f64 = pos
                    .iter()
                    .enumerate()
                    .map(|(a, &sk)| softplus(-t.weights[a * nb + b] * (sk - sj)))
                    .sum();
                let outer = 2.0 * h / t.normalizer;
                for (a, &sk) in pos.iter().enumerate() {
                    let w = t.weights[a * nb + b];
                    let c = -outer * sigmoid_neg(w * (sk - sj)) * w;
                    f(i, t.relevant[a], t.irrelevant[b], c);
                }
            }
        }
    }

    pub fn user_gradients(&self, users: &FactorMatrix, venues: &FactorMatrix) -> FactorMatrix {
        let d = users.dim();
        let mut g = FactorMatrix::zeros(d, self.n);
        self.for_each_pair(users, venues, |i, k, j, c| {
            let (vk, vj) = (venues.col(k), venues.col(j));
            for (r, gi) in g.col_mut(i).iter_mut().enumerate() {
                *gi += c * (vk[r] - vj[r]);
            }
        });
        for (gi, ui) in g.as_mut_slice().iter_mut().zip(users.as_slice()) {
            *gi += self.lambda * ui;
        }
        g
    }

    pub fn venue_gradients(&self, users: &FactorMatrix, venues: &FactorMatrix) -> FactorMatrix {
        let d = venues.dim();
        let mut g = FactorMatrix::zeros(d, self.m);
        self.for_each_pair(users, venues, |i, k, j, c| {
            let u = users.col(i);
            for (gk, ur) in g.col_mut(k).iter_mut().zip(u) {
                *gk += c * ur;
            }
            for (gj, ur) in g.col_mut(j).iter_mut().zip(u) {
                *gj -= c * ur;
            }
        });
        for (gj, vj) in g.as_mut_slice().iter_mut().zip(venues.as_slice()) {
            *gj += self.lambda * vj;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoryBag, Rating, UserId, Venue};
    use crate::similarity::{SimilarityKind, SimilarityMatrix};

    fn stack1(m: usize, value: f64, alpha: f64) -> SimilarityStack {
        SimilarityStack::new(
            vec![SimilarityMatrix::from_fn(
                SimilarityKind::Custom,
                m,
                |_, _| value,
            )],
            vec![alpha],
        )
        .unwrap()
    }

    fn dataset(ratings: &[(&str, usize, u8)], m: usize) -> Dataset {
        let venues = (0..m)
            .map(|j| Venue {
                id: format!("v{j}"),
                latitude: 0.0,
                longitude: 0.0,
                categories: CategoryBag::new(),
                reviews: vec![],
            })
            .collect();
        let ratings = ratings
            .iter()
            .map(|&(u, j, value)| Rating {
                user: UserId::new(u).unwrap(),
                venue: format!("v{j}"),
                value,
            })
            .collect();
        Dataset::new(venues, ratings).unwrap()
    }

    #[test]
    fn delta_examples() {
        let stack = stack1(2, 0.7, 0.4);
        assert_eq!(
            delta(&[1.0, -2.0], &[0.3, 0.3], &[0.3, 0.3], &stack, 0, 1),
            0.0
        );

        let zero = stack1(2, 0.0, 1.0);
        let d = delta(&[1.0, 2.0], &[3.0, 0.5], &[1.0, -1.0], &zero, 0, 1);
        assert!((d - (1.0 * 2.0 + 2.0 * 1.5)).abs() < 1e-15);

        let one = stack1(2, 1.0, 0.5);
        let d = delta(&[2.0], &[3.0], &[1.0], &one, 0, 1);
        assert!((d - 0.735_758_882_342_884_6).abs() < 1e-12, "{d}");
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        // softplus(50) = 50 + log1p(e^-50)
        assert!((softplus(50.0) - (50.0 + 1.928_749_847_963_918e-22)).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert_eq!(softplus(800.0), 800.0);
        assert!((sigmoid_neg(0.0) - 0.5).abs() < 1e-16);
        assert_eq!(sigmoid_neg(1000.0), 0.0);
        assert_eq!(sigmoid_neg(-1000.0), 1.0);
    }

    #[test]
    fn surrogate_height_cases() {
        let d = dataset(&[("u", 0, 5), ("u", 1, 1), ("w", 1, 2)], 2);
        let stack = stack1(2, 0.0, 1.0);
        let users = FactorMatrix::from_columns(1, &[vec![1.0], vec![1.0]]).unwrap();
        let venues = FactorMatrix::from_columns(1, &[vec![0.0], vec![0.0]]).unwrap();
        let ctx = PairwiseLossContext::new(&d, 0, &stack);
        let h = surrogate_height(&ctx, 1, &users, &venues);
        assert!((h - std::f64::consts::LN_2).abs() < 1e-15);
        // w has no relevant venue
        let ctx = PairwiseLossContext::new(&d, 1, &stack);
        assert_eq!(surrogate_height(&ctx, 1, &users, &venues), 0.0);
        // delta = -50
        let users = FactorMatrix::from_columns(1, &[vec![50.0], vec![0.0]]).unwrap();
        let venues = FactorMatrix::from_columns(1, &[vec![0.0], vec![1.0]]).unwrap();
        let ctx = PairwiseLossContext::new(&d, 0, &stack);
        let h = surrogate_height(&ctx, 1, &users, &venues);
        assert!((h - 50.0).abs() < 1e-12 && h.is_finite());
    }

    #[test]
    fn objective_at_zero() {
        // u0: 2 relevant, 3 irrelevant; u1: only relevant
        let d = dataset(
            &[
                ("a", 0, 5),
                ("a", 1, 4),
                ("a", 2, 1),
                ("a", 3, 2),
                ("a", 4, 3),
                ("b", 0, 5),
            ],
            5,
        );
        let hp = Hyperparams {
            d: 3,
            lambda: 0.0,
            alphas: vec![1.0],
            ..Default::default()
        };
        let users = FactorMatrix::zeros(3, 2);
        let venues = FactorMatrix::zeros(3, 5);
        let r = objective(&users, &venues, &d, &stack1(5, 0.3, 1.0), &hp).unwrap();
        let expected = (1.0 / 3.0) * 3.0 * (2.0 * std::f64::consts::LN_2).powi(2);
        assert!((r - expected).abs() < 1e-14);
        let hp = Hyperparams { lambda: 2.5, ..hp };
        let r2 = objective(&users, &venues, &d, &stack1(5, 0.3, 1.0), &hp).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn regularizer_only_gradient() {
        let d = dataset(&[], 3);
        let hp = Hyperparams {
            d: 2,
            lambda: 0.7,
            alphas: vec![1.0],
            ..Default::default()
        };
        let users = FactorMatrix::zeros(2, 0);
        let venues =
            FactorMatrix::from_columns(2, &[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]])
                .unwrap();
        let g = gradients(&users, &venues, &d, &stack1(3, 0.0, 1.0), &hp).unwrap();
        for (a, b) in g.venues.as_slice().iter().zip(venues.as_slice()) {
            assert!((a - 0.7 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn inactive_user_has_zero_gradient() {
        let d = dataset(&[("a", 0, 5), ("a", 1, 1), ("b", 0, 5), ("b", 2, 4)], 3);
        let hp = Hyperparams {
            d: 2,
            lambda: 0.0,
            alphas: vec![1.0],
            ..Default::default()
        };
        let users = FactorMatrix::from_columns(2, &[vec![0.3, -0.1], vec![0.2, 0.9]]).unwrap();
        let venues =
            FactorMatrix::from_columns(2, &[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]])
                .unwrap();
        let g = gradients(&users, &venues, &d, &stack1(3, 0.0, 1.0), &hp).unwrap();
        assert_eq!(g.users.col(1), &[0.0, 0.0]);
        assert!(g.users.col(0).iter().any(|x| *x != 0.0));
    }

    #[test]
    fn shape_errors() {
        let d = dataset(&[("a", 0, 5)], 2);
        let hp = Hyperparams {
            d: 2,
            alphas: vec![1.0],
            ..Default::default()
        };
        let bad = FactorMatrix::zeros(2, 3);
        assert!(objective(
            &FactorMatrix::zeros(2, 1),
            &bad,
            &d,
            &stack1(2, 0.0, 1.0),
            &hp
        )
        .is_err());
        assert!(objective(
            &FactorMatrix::zeros(2, 1),
            &FactorMatrix::zeros(2, 2),
            &d,
            &stack1(3, 0.0, 1.0),
            &hp
        )
        .is_err());
        let hp2 = Hyperparams {
            alphas: vec![1.0, 1.0],
            ..hp
        };
        assert!(objective(
            &FactorMatrix::zeros(2, 1),
            &FactorMatrix::zeros(2, 2),
            &d,
            &stack1(2, 0.0, 1.0),
            &hp2
        )
        .is_err());
    }
}
