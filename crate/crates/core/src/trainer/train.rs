use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::similarity::SimilarityStack;

use super::model::{FactorMatrix, LatentModel};
use super::objective::Problem;
use super::{Hyperparams, TrainError};

/// Uniform draws in `[-1/sqrt(d), 1/sqrt(d)]`: all user columns first, then
/// all venue columns, each column top to bottom.
pub fn initialize(d: usize, n: usize, m: usize, seed: u64) -> (FactorMatrix, FactorMatrix) {
    let bound = 1.0 / (d as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| {
        let mut f = FactorMatrix::zeros(d, count);
        for x in f.as_mut_slice() {
            *x = rng.gen_range(-bound..=bound);
        }
        f
    };
    let users = draw(n);
    let venues = draw(m);
    (users, venues)
}

pub fn train(
    dataset: &Dataset,
    stack: &SimilarityStack,
    hp: &Hyperparams,
) -> Result<LatentModel, TrainError> {
    train_with_observer(dataset, stack, hp, |_, _| {})
}

/// Alternating gradient descent. Each iteration steps every user vector
/// using the current `(U, V)`, then every venue vector using the updated `U`
/// and the old `V`. Stops once the objective moves by at most `epsilon` or
/// after `max_iter` iterations. `observe(t, objective)` is called for the
/// initial objective (`t = 0`) and after every iteration.
pub fn train_with_observer(
    dataset: &Dataset,
    stack: &SimilarityStack,
    hp: &Hyperparams,
    mut observe: impl FnMut(usize, f64),
) -> Result<LatentModel, TrainError> {
    hp.validate()?;
    let problem = Problem::new(dataset, stack, &hp.alphas, hp.lambda)?;
    let (mut users, mut venues) = initialize(hp.d, dataset.n_users(), dataset.n_venues(), hp.seed);

    let mut current = problem.objective(&users, &venues);
    if !current.is_finite() {
        return Err(TrainError::NonFinite { iteration: 0 });
    }
    let mut previous = current / 2.0;
    let mut trace = vec![current];
    observe(0, current);

    let mut t = 0;
    while (current - previous).abs() > hp.epsilon && t < hp.max_iter {
        t += 1;
        let grad_users = problem.user_gradients(&users, &venues);
        users.sub_scaled(hp.gamma, &grad_users);
        let grad_venues = problem.venue_gradients(&users, &venues);
        venues.sub_scaled(hp.gamma, &grad_venues);

        previous = current;
        current = problem.objective(&users, &venues);
        if !current.is_finite() {
            return Err(TrainError::NonFinite { iteration: t });
        }
        trace.push(current);
        observe(t, current);
    }

    LatentModel::new(
        users,
        venues,
        hp.clone(),
        trace,
        dataset.users().iter().map(|u| u.to_string()).collect(),
        dataset.venues().iter().map(|v| v.id.clone()).collect(),
    )
}
