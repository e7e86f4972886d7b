//! Exhaustive oracles shared by the unit-level integration tests and the
//! acceptance suite. Each check returns a diagnostic on failure.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use recdp_core::metrics::{metric_value, Metric, NoveltyDiscount, PopularityModel};
use recdp_core::recommenders::{bpr_triple_gradient, bpr_triple_objective};
use recdp_core::rng;

const POOL: usize = 5;
const RELEVANT: [u32; 2] = [1, 3];
const COUNTS: [u64; POOL] = [8, 4, 2, 1, 0];
const SEEN_BY: [u64; POOL] = [6, 4, 2, 1, 0];
const ACTIVE_USERS: u64 = 10;

fn permutations(items: &mut Vec<u32>, k: usize, out: &mut Vec<Vec<u32>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// All orderings of a 5-item pool.
pub fn all_orderings() -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    permutations(&mut (0..POOL as u32).collect(), 0, &mut out);
    out
}

fn rank_weight(position: usize) -> f64 {
    // position is 1-based: 1 / log2(position + 1)
    std::f64::consts::LN_2 / ((position + 1) as f64).ln()
}

fn oracle(metric: Metric, order: &[u32], n: usize, discount: NoveltyDiscount) -> f64 {
    let top: Vec<u32> = order.iter().copied().take(n).collect();
    let is_rel: Vec<bool> = top.iter().map(|i| RELEVANT.contains(i)).collect();
    let hits = is_rel.iter().filter(|r| **r).count() as f64;
    let novelty_avg = |value: &dyn Fn(u32) -> f64| {
        let weights: Vec<f64> = (1..=top.len())
            .map(|p| match discount {
                NoveltyDiscount::None => 1.0,
                NoveltyDiscount::Log2 => rank_weight(p),
            })
            .collect();
        let num: f64 = top.iter().zip(&weights).map(|(i, w)| w * value(*i)).sum();
        num / weights.iter().sum::<f64>()
    };
    match metric {
        Metric::Precision => hits / n as f64,
        Metric::Recall => hits / RELEVANT.len() as f64,
        Metric::Mrr => is_rel.iter().position(|r| *r).map_or(0.0, |k| 1.0 / (k + 1) as f64),
        Metric::Ndcg => {
            let dcg: f64 = (1..=top.len()).filter(|p| is_rel[p - 1]).map(rank_weight).sum();
            let ideal: f64 = (1..=RELEVANT.len().min(n)).map(rank_weight).sum();
            dcg / ideal
        }
        Metric::Efd => {
            let total: u64 = COUNTS.iter().sum();
            novelty_avg(&|i| {
                let c = COUNTS[i as usize];
                let p = if c == 0 {
                    1.0 / (total + 1) as f64
                } else {
                    c as f64 / total as f64
                };
                -p.ln() / std::f64::consts::LN_2
            })
        }
        Metric::Epc => novelty_avg(&|i| 1.0 - SEEN_BY[i as usize] as f64 / ACTIVE_USERS as f64),
    }
}

/// Every metric on every ordering of the pool, for every cut-off 1..=5 and
/// both novelty discounts, against the closed-form oracle above.
pub fn metric_permutation_oracle() -> Result<usize, String> {
    let pop = PopularityModel::from_counts(COUNTS.to_vec(), SEEN_BY.to_vec(), ACTIVE_USERS);
    let orders = all_orderings();
    if orders.len() != 120 {
        return Err(format!("expected 120 orderings, got {}", orders.len()));
    }
    let mut checked = 0;
    for order in &orders {
        for n in 1..=POOL {
            for discount in [NoveltyDiscount::None, NoveltyDiscount::Log2] {
                for metric in Metric::ALL {
                    let got = metric_value(metric, order, &RELEVANT, &pop, n, discount);
                    let want = oracle(metric, order, n, discount);
                    if (got - want).abs() > 1e-12 {
                        return Err(format!(
                            "{} @{n} {discount:?} on {order:?}: {got} vs oracle {want}",
                            metric.name()
                        ));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

/// Largest relative error between the analytic BPR gradient and a central
/// finite difference, over `triples` seeded random triples.
pub fn bpr_gradient_check(triples: usize, seed: u64) -> Result<f64, String> {
    const H: f64 = 1e-5;
    let mut r = rng::seeded(seed);
    let normal = Normal::new(0.0, 0.5).unwrap();
    let mut worst = 0.0f64;
    for t in 0..triples {
        let f = r.random_range(2..=12usize);
        let draw = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..f).map(|_| normal.sample(r)).collect() };
        let mut params = [draw(&mut r), draw(&mut r), draw(&mut r)];
        let (lu, li) = (r.random_range(0.0..0.1), r.random_range(0.0..0.01));
        let g = bpr_triple_gradient(&params[0], &params[1], &params[2], lu, li);
        let analytic = [g.d_user, g.d_pos, g.d_neg];
        for block in 0..3 {
            for k in 0..f {
                let orig = params[block][k];
                params[block][k] = orig + H;
                let up = bpr_triple_objective(&params[0], &params[1], &params[2], lu, li);
                params[block][k] = orig - H;
                let down = bpr_triple_objective(&params[0], &params[1], &params[2], lu, li);
                params[block][k] = orig;
                let numeric = (up - down) / (2.0 * H);
                let a = analytic[block][k];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
                if rel > 1e-4 {
                    return Err(format!(
                        "triple {t} block {block} coord {k}: analytic {a} vs numeric {numeric}"
                    ));
                }
                worst = worst.max(rel);
            }
        }
    }
    Ok(worst)
}
