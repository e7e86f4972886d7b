//! Seeded synthetic rating logs with latent-factor structure and a
//! long-tailed item popularity, shaped like MovieLens-100k by default.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use recdp_core::dataset::RawRecord;
use recdp_core::rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub users: usize,
    pub items: usize,
    /// Every user gets at least this many ratings (capped at `items`).
    pub min_ratings_per_user: usize,
    /// Mean ratings per user; the excess over the minimum is exponential.
    pub mean_ratings_per_user: f64,
    pub latent_dims: usize,
    /// Zipf exponent of item popularity.
    pub popularity_exponent: f64,
    /// How strongly taste (vs. popularity) drives which items get rated.
    pub taste_weight: f64,
    /// Standard deviation of rating noise on the latent scale.
    pub rating_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec::movielens_100k_like(0)
    }
}

const FIRST_TIMESTAMP: i64 = 874_724_710;

/// Share of ratings 1..=4; rating 5 takes the rest.
const RATING_SHARES: [f64; 4] = [0.06, 0.11, 0.27, 0.34];

impl SyntheticSpec {
    /// 943 users, 1682 items, about 100k ratings, at least 20 per user.
    pub fn movielens_100k_like(seed: u64) -> Self {
        SyntheticSpec {
            users: 943,
            items: 1682,
            min_ratings_per_user: 20,
            mean_ratings_per_user: 106.0,
            latent_dims: 8,
            popularity_exponent: 0.9,
            taste_weight: 2.0,
            rating_noise: 0.6,
            seed,
        }
    }

    /// A small corpus for quick experiments and tests.
    pub fn small(users: usize, items: usize, seed: u64) -> Self {
        SyntheticSpec {
            users,
            items,
            min_ratings_per_user: (items / 10).max(5),
            mean_ratings_per_user: (items as f64 * 0.25).max(8.0),
            latent_dims: 4,
            ..SyntheticSpec::movielens_100k_like(seed)
        }
    }

    /// Generates the log: records grouped by user, in time order per user.
    pub fn generate(&self) -> Vec<RawRecord> {
        assert!(self.users > 0 && self.items > 0 && self.latent_dims > 0);
        let mut r = rng::seeded(self.seed);
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        let noise = Normal::new(0.0, self.rating_noise.max(0.0)).expect("finite noise");
        let d = self.latent_dims;
        let latent = |n: usize, r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..n * d).map(|_| std_normal.sample(r)).collect()
        };
        let user_taste = latent(self.users, &mut r);
        let item_traits = latent(self.items, &mut r);

        // Zipf popularity over a shuffled item order.
        let mut pop_rank: Vec<usize> = (0..self.items).collect();
        pop_rank.shuffle(&mut r);
        let log_pop: Vec<f64> = pop_rank
            .iter()
            .map(|rank| -self.popularity_exponent * ((rank + 1) as f64).ln())
            .collect();

        let extra_mean = (self.mean_ratings_per_user - self.min_ratings_per_user as f64).max(1.0);
        let extra = Exp::new(1.0 / extra_mean).expect("positive rate");
        let scale = 1.0 / (d as f64).sqrt();

        let mut events = Vec::new();
        let mut keyed: Vec<(f64, usize, f64)> = Vec::with_capacity(self.items);
        for u in 0..self.users {
            let n = (self.min_ratings_per_user + extra.sample(&mut r) as usize).min(self.items);
            let pu = &user_taste[u * d..(u + 1) * d];
            keyed.clear();
            for i in 0..self.items {
                let qi = &item_traits[i * d..(i + 1) * d];
                let affinity = scale * pu.iter().zip(qi).map(|(a, b)| a * b).sum::<f64>();
                let log_w = log_pop[i] + self.taste_weight * affinity;
                // Efraimidis-Spirakis: the n largest ln(U)/w are a weighted
                // sample without replacement
                let unit: f64 = r.random_range(f64::MIN_POSITIVE..1.0);
                keyed.push((unit.ln() / log_w.exp(), i, affinity));
            }
            keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut t = FIRST_TIMESTAMP + r.random_range(0..20_000_000i64);
            for &(_, i, affinity) in keyed.iter().take(n) {
                t += r.random_range(0..3_600i64);
                events.push((u, i, affinity + noise.sample(&mut r), t));
            }
        }
        // ratings follow the latent score through global quantiles
        let mut sorted: Vec<f64> = events.iter().map(|e| e.2).collect();
        sorted.sort_by(f64::total_cmp);
        let mut cut = [0.0; 4];
        let mut cumulative = 0.0;
        for (c, share) in cut.iter_mut().zip(RATING_SHARES) {
            cumulative += share;
            *c = sorted[((cumulative * sorted.len() as f64) as usize).min(sorted.len() - 1)];
        }
        events
            .into_iter()
            .map(|(u, i, z, timestamp)| RawRecord {
                user: (u + 1).to_string(),
                item: (i + 1).to_string(),
                rating: (1 + cut.iter().filter(|c| z >= **c).count()) as f64,
                timestamp,
            })
            .collect()
    }
}
