use alloc::vec::Vec;

use super::grid::{Dimension, Grid};
use crate::rng;
use crate::{Error, Result};

/// Restricts pair sampling to configs sharing one dimension value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedDimension {
    pub dimension: Dimension,
    pub value: f64,
}

/// Unordered config pairs `(a, b)` with `a < b`, as grid indices.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairSample {
    pub pairs: Vec<(usize, usize)>,
    pub seed: u64,
    pub constraint: Option<FixedDimension>,
    /// Size of the pair universe the sample was drawn from.
    pub universe: u64,
}

impl PairSample {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Grid indices that satisfy `constraint`, ascending.
pub fn eligible_configs(grid: &Grid, constraint: Option<FixedDimension>) -> Vec<usize> {
    grid.configs()
        .iter()
        .enumerate()
        .filter(|(_, cfg)| constraint.is_none_or(|c| c.dimension.value_of(cfg) == Some(c.value)))
        .map(|(i, _)| i)
        .collect()
}

/// Number of unordered pairs over `n` items.
pub fn universe_size(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// The `rank`-th pair of `0..n` in canonical order (0,1), (0,2), ..., (1,2), ...
fn nth_pair(n: usize, mut rank: u64) -> (usize, usize) {
    let mut a = 0;
    loop {
        let row = (n - 1 - a) as u64;
        if rank < row {
            return (a, a + 1 + rank as usize);
        }
        rank -= row;
        a += 1;
    }
}

fn draw(configs: &[usize], take: usize, seed: u64) -> Vec<(usize, usize)> {
    let universe = universe_size(configs.len());
    let mut ranks: Vec<u64> = if take as u64 == universe {
        (0..universe).collect()
    } else {
        let mut r = rng::seeded(seed);
        rand::seq::index::sample(&mut r, universe as usize, take)
            .into_iter()
            .map(|x| x as u64)
            .collect()
    };
    ranks.sort_unstable();
    ranks
        .into_iter()
        .map(|rank| {
            let (a, b) = nth_pair(configs.len(), rank);
            (configs[a], configs[b])
        })
        .collect()
}

/// Draws `m` distinct unordered pairs from the (optionally constrained)
/// pair universe without replacement. Pairs are listed in canonical order.
pub fn sample_pairs(grid: &Grid, m: usize, seed: u64, constraint: Option<FixedDimension>) -> Result<PairSample> {
    if m == 0 {
        return Err(Error::InvalidArgument("pair count m must be >= 1".into()));
    }
    let configs = eligible_configs(grid, constraint);
    let universe = universe_size(configs.len());
    if universe < m as u64 {
        return Err(Error::PairUniverseTooSmall { universe, requested: m });
    }
    Ok(PairSample {
        pairs: draw(&configs, m, seed),
        seed,
        constraint,
        universe,
    })
}

/// Like [`sample_pairs`] but takes the whole universe when it is smaller
/// than `m`. The flag reports that shortfall.
pub fn sample_pairs_up_to(
    grid: &Grid,
    m: usize,
    seed: u64,
    constraint: Option<FixedDimension>,
) -> Result<(PairSample, bool)> {
    let configs = eligible_configs(grid, constraint);
    let universe = universe_size(configs.len());
    let take = (m as u64).min(universe) as usize;
    Ok((
        PairSample {
            pairs: draw(&configs, take, seed),
            seed,
            constraint,
            universe,
        },
        universe < m as u64,
    ))
}
