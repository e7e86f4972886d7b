use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{HyperConfig, Scorer};
use crate::dataset::{Dataset, RatingMatrix};
use crate::math;
use crate::rng;
use crate::{Error, Result};

/// User regularization is `learning_rate * USER_REG_SCALE`.
pub const USER_REG_SCALE: f64 = 1.0 / 20.0;
/// Item regularization (positive and negative items) is `learning_rate * ITEM_REG_SCALE`.
pub const ITEM_REG_SCALE: f64 = 1.0 / 200.0;
/// Standard deviation of the Gaussian factor initialization.
pub const INIT_STD: f64 = 0.1;

/// Dot-product factor model trained with the BPR pairwise criterion.
/// No bias terms.
#[derive(Debug, Clone, PartialEq)]
pub struct MfModel {
    factors: usize,
    iterations: u32,
    learning_rate: f64,
    seed: u64,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

impl MfModel {
    /// Builds a model from row-major factor tables.
    pub fn from_parts(
        factors: usize,
        iterations: u32,
        learning_rate: f64,
        seed: u64,
        user_factors: Vec<f64>,
        item_factors: Vec<f64>,
    ) -> Result<Self> {
        if factors == 0 || !user_factors.len().is_multiple_of(factors) || !item_factors.len().is_multiple_of(factors) {
            return Err(Error::InvalidArgument(
                "factor tables do not match the factor count".into(),
            ));
        }
        Ok(MfModel {
            factors,
            iterations,
            learning_rate,
            seed,
            user_factors,
            item_factors,
        })
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn lambda_user(&self) -> f64 {
        self.learning_rate * USER_REG_SCALE
    }

    pub fn lambda_item(&self) -> f64 {
        self.learning_rate * ITEM_REG_SCALE
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn user_factors(&self) -> &[f64] {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &[f64] {
        &self.item_factors
    }

    pub fn user_vector(&self, user: usize) -> &[f64] {
        &self.user_factors[user * self.factors..(user + 1) * self.factors]
    }

    pub fn item_vector(&self, item: usize) -> &[f64] {
        &self.item_factors[item * self.factors..(item + 1) * self.factors]
    }

    /// Multiplies every factor by `c`.
    pub fn scale(&mut self, c: f64) {
        self.user_factors.iter_mut().for_each(|x| *x *= c);
        self.item_factors.iter_mut().for_each(|x| *x *= c);
    }

    fn all_finite(&self) -> bool {
        self.user_factors
            .iter()
            .chain(&self.item_factors)
            .all(|x| x.is_finite())
    }
}

impl Scorer for MfModel {
    fn score(&self, user: usize, item: usize) -> f64 {
        math::dot(self.user_vector(user), self.item_vector(item))
    }

    fn n_users(&self) -> usize {
        self.user_factors.len() / self.factors
    }

    fn n_items(&self) -> usize {
        self.item_factors.len() / self.factors
    }
}

/// ln sigma(x), computed without overflow.
fn ln_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -math::ln1p(math::exp(-x))
    } else {
        x - math::ln1p(math::exp(x))
    }
}

/// Per-triple objective `ln sigma(x_uij) - lu/2 |p_u|^2 - li/2 |q_i|^2 - li/2 |q_j|^2`
/// with `x_uij = p_u . q_i - p_u . q_j`.
pub fn bpr_triple_objective(p_u: &[f64], q_i: &[f64], q_j: &[f64], lambda_user: f64, lambda_item: f64) -> f64 {
    let x = math::dot(p_u, q_i) - math::dot(p_u, q_j);
    let sq = |v: &[f64]| math::dot(v, v);
    ln_sigmoid(x) - 0.5 * lambda_user * sq(p_u) - 0.5 * lambda_item * (sq(q_i) + sq(q_j))
}

/// Gradient of [`bpr_triple_objective`] with respect to `(p_u, q_i, q_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BprStep {
    pub d_user: Vec<f64>,
    pub d_pos: Vec<f64>,
    pub d_neg: Vec<f64>,
}

pub fn bpr_triple_gradient(p_u: &[f64], q_i: &[f64], q_j: &[f64], lambda_user: f64, lambda_item: f64) -> BprStep {
    let x = math::dot(p_u, q_i) - math::dot(p_u, q_j);
    let g = math::sigmoid(-x);
    let f = p_u.len();
    let mut step = BprStep {
        d_user: Vec::with_capacity(f),
        d_pos: Vec::with_capacity(f),
        d_neg: Vec::with_capacity(f),
    };
    for k in 0..f {
        step.d_user.push(g * (q_i[k] - q_j[k]) - lambda_user * p_u[k]);
        step.d_pos.push(g * p_u[k] - lambda_item * q_i[k]);
        step.d_neg.push(-g * p_u[k] - lambda_item * q_j[k]);
    }
    step
}

/// Applies one ascent step on the triple (u, i, j). All three gradients
/// are taken at the pre-step parameters.
pub(crate) fn sgd_step(m: &mut MfModel, u: usize, i: usize, j: usize) {
    let f = m.factors;
    let (lu, li, eta) = (m.lambda_user(), m.lambda_item(), m.learning_rate);
    let step = bpr_triple_gradient(m.user_vector(u), m.item_vector(i), m.item_vector(j), lu, li);
    for k in 0..f {
        m.user_factors[u * f + k] += eta * step.d_user[k];
        m.item_factors[i * f + k] += eta * step.d_pos[k];
        m.item_factors[j * f + k] += eta * step.d_neg[k];
    }
}

/// Draws (u, i, j): u uniform over users with at least one rated and one
/// unrated item, i uniform over u's items, j uniform over unrated items by
/// rejection.
struct TripleSampler<'a> {
    ratings: &'a RatingMatrix,
    users: Vec<usize>,
}

impl<'a> TripleSampler<'a> {
    fn new(ratings: &'a RatingMatrix) -> Self {
        let n_items = ratings.n_items();
        let users = (0..ratings.n_users())
            .filter(|&u| {
                let n = ratings.user_row(u).len();
                n > 0 && n < n_items
            })
            .collect();
        TripleSampler { ratings, users }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> (usize, usize, usize) {
        let u = self.users[rng::below(rng, self.users.len())];
        let row = self.ratings.user_row(u);
        let i = row[rng::below(rng, row.len())].0 as usize;
        loop {
            let j = rng::below(rng, self.ratings.n_items());
            if row.binary_search_by_key(&(j as u32), |e| e.0).is_err() {
                return (u, i, j);
            }
        }
    }
}

/// Trains BPR-MF: Gaussian(0, 0.1) initialization (user table, then item
/// table), then `iterations` passes of `|cv_train|` sampled SGD steps each.
/// Any non-finite factor after a pass aborts with the 1-based pass index.
pub fn train_bpr_mf(cv_train: &Dataset, cfg: &HyperConfig, seed: u64) -> Result<MfModel> {
    let HyperConfig::BprMf {
        factors,
        iterations,
        learning_rate,
    } = *cfg
    else {
        return Err(Error::InvalidArgument(alloc::format!(
            "not a BPR-MF configuration: {cfg:?}"
        )));
    };
    cfg.validate()?;
    let ratings = cv_train.rating_matrix();
    let mut rng = rng::seeded(seed);
    let mut model = init_model(&ratings, factors as usize, iterations, learning_rate, seed, &mut rng);
    let sampler = TripleSampler::new(&ratings);
    if sampler.users.is_empty() {
        return Ok(model);
    }
    let steps = ratings.n_ratings();
    for t in 1..=iterations {
        for _ in 0..steps {
            let (u, i, j) = sampler.sample(&mut rng);
            sgd_step(&mut model, u, i, j);
        }
        if !model.all_finite() {
            return Err(Error::TrainingDiverged { iteration: t });
        }
    }
    Ok(model)
}

fn init_model<R: Rng>(
    ratings: &RatingMatrix,
    factors: usize,
    iterations: u32,
    learning_rate: f64,
    seed: u64,
    rng: &mut R,
) -> MfModel {
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal parameters");
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| normal.sample(rng)).collect() };
    let user_factors = draw(ratings.n_users() * factors);
    let item_factors = draw(ratings.n_items() * factors);
    MfModel {
        factors,
        iterations,
        learning_rate,
        seed,
        user_factors,
        item_factors,
    }
}
