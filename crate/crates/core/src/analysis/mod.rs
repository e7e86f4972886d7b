//! Grids, pair sampling, the train -> recommend -> evaluate pipeline over
//! (config, fold) cells, and discriminative-power analyses over a metric
//! store.

mod grid;
mod pairs;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use grid::{
    build_grid, subgrid_around_best, Dimension, Grid, GridSpec, Rounding, ValueSpec, DEFAULT_FACTORS,
    DEFAULT_ITERATIONS, DEFAULT_LEARNING_RATES, DEFAULT_NEIGHBORS,
};
pub use pairs::{eligible_configs, sample_pairs, sample_pairs_up_to, universe_size, FixedDimension, PairSample};

use crate::dataset::{fold_view, Dataset, FoldAssignment, RatingMatrix};
use crate::metrics::{
    evaluate_system, judge, EvalOptions, Metric, PerUserMetricMatrix, PopularityModel, RelevanceJudgments,
};
use crate::recommenders::{recommend_top_n, train, HyperConfig, Model};
use crate::rng::derive_seed;
use crate::stats::{build_curve, discriminative_power, paired_t_test, PValueCurve, Tail};
use crate::{Error, Result};

/// Everything a cell needs from one fold, shared by all configs.
#[derive(Debug, Clone)]
pub struct FoldContext {
    pub fold: usize,
    pub cv_train: Dataset,
    pub cv_valid: Dataset,
    pub ratings: RatingMatrix,
    pub relevance: RelevanceJudgments,
    pub popularity: PopularityModel,
}

impl FoldContext {
    pub fn new(train: &Dataset, fa: &FoldAssignment, fold: usize, opts: &EvalOptions) -> Result<Self> {
        let (cv_train, cv_valid) = fold_view(train, fa, fold)?;
        Ok(FoldContext {
            fold,
            ratings: cv_train.rating_matrix(),
            relevance: judge(&cv_valid, opts.tau, opts.threshold),
            popularity: PopularityModel::from_dataset(&cv_train),
            cv_train,
            cv_valid,
        })
    }
}

/// Trains `cfg` on the fold, ranks for every judged user and scores all
/// six metrics.
pub fn run_cell(
    ctx: &FoldContext,
    cfg: &HyperConfig,
    config: usize,
    opts: &EvalOptions,
    seed: u64,
) -> Result<Vec<PerUserMetricMatrix>> {
    let model = train(cfg, &ctx.cv_train, seed)?;
    evaluate_model(ctx, &model, config, opts)
}

/// Ranks for every judged user of the fold with an already trained model
/// and scores all six metrics.
pub fn evaluate_model(
    ctx: &FoldContext,
    model: &Model,
    config: usize,
    opts: &EvalOptions,
) -> Result<Vec<PerUserMetricMatrix>> {
    let lists = ctx
        .relevance
        .judged_users()
        .map(|u| recommend_top_n(model, u, &ctx.ratings, opts.cutoff))
        .collect::<Result<Vec<_>>>()?;
    evaluate_system(&lists, &ctx.relevance, &ctx.popularity, opts, config, ctx.fold)
}

/// Result of one (config, fold) cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Done(Vec<PerUserMetricMatrix>),
    Failed(String),
}

/// Per-user metric vectors keyed by (config index, fold).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricStore {
    folds: usize,
    cells: BTreeMap<(usize, usize), CellOutcome>,
}

impl MetricStore {
    pub fn new(folds: usize) -> Self {
        MetricStore {
            folds,
            cells: BTreeMap::new(),
        }
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn insert(&mut self, config: usize, fold: usize, outcome: CellOutcome) {
        self.cells.insert((config, fold), outcome);
    }

    pub fn cell(&self, config: usize, fold: usize) -> Option<&CellOutcome> {
        self.cells.get(&(config, fold))
    }

    pub fn cells(&self) -> impl Iterator<Item = (&(usize, usize), &CellOutcome)> {
        self.cells.iter()
    }

    pub fn matrix(&self, config: usize, fold: usize, metric: Metric) -> Option<&PerUserMetricMatrix> {
        match self.cells.get(&(config, fold))? {
            CellOutcome::Done(ms) => ms.iter().find(|m| m.metric == metric),
            CellOutcome::Failed(_) => None,
        }
    }

    /// True if any fold of `config` failed.
    pub fn is_failed(&self, config: usize) -> bool {
        (0..self.folds).any(|f| matches!(self.cells.get(&(config, f)), Some(CellOutcome::Failed(_))))
    }

    pub fn failed_cells(&self) -> usize {
        self.cells
            .values()
            .filter(|c| matches!(c, CellOutcome::Failed(_)))
            .count()
    }
}

/// Runs every (config, fold) cell sequentially in memory. Training
/// divergence marks the cell failed; other errors abort.
pub fn run_grid(
    grid: &Grid,
    train: &Dataset,
    fa: &FoldAssignment,
    opts: &EvalOptions,
    master_seed: u64,
) -> Result<MetricStore> {
    let mut store = MetricStore::new(fa.k());
    for fold in 0..fa.k() {
        let ctx = FoldContext::new(train, fa, fold, opts)?;
        for (idx, cfg) in grid.configs().iter().enumerate() {
            let seed = derive_seed(master_seed, idx as u64, fold as u64);
            let outcome = match run_cell(&ctx, cfg, idx, opts, seed) {
                Ok(ms) => CellOutcome::Done(ms),
                Err(e @ Error::TrainingDiverged { .. }) => CellOutcome::Failed(e.to_string()),
                Err(e) => return Err(e),
            };
            store.insert(idx, fold, outcome);
        }
    }
    Ok(store)
}

/// Discriminative power of one metric.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricDp {
    pub metric: Metric,
    pub dp: f64,
    pub dp_plus_sigma: f64,
    pub curve: PValueCurve,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DpReport {
    pub metrics: Vec<MetricDp>,
    pub folds: usize,
    /// Pairs that entered every curve.
    pub pairs_used: Vec<(usize, usize)>,
    /// Pairs dropped because some fold had fewer than two common users.
    pub pairs_dropped: Vec<(usize, usize)>,
    /// Pairs excluded because a config has a failed cell.
    pub pairs_failed: Vec<(usize, usize)>,
}

impl DpReport {
    pub fn get(&self, metric: Metric) -> Option<&MetricDp> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

/// Values of users present in both matrices, aligned by user.
fn aligned(a: &PerUserMetricMatrix, b: &PerUserMetricMatrix) -> (Vec<f64>, Vec<f64>) {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    while i < a.users.len() && j < b.users.len() {
        match a.users[i].cmp(&b.users[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                x.push(a.values[i]);
                y.push(b.values[j]);
                i += 1;
                j += 1;
            }
        }
    }
    (x, y)
}

/// Per metric and fold, paired t-tests over every pair; the p-values are
/// turned into a sorted fold-averaged curve and summed.
pub fn dp_analysis(store: &MetricStore, pairs: &[(usize, usize)], metrics: &[Metric], tail: Tail) -> Result<DpReport> {
    if metrics.is_empty() {
        return Err(Error::InvalidArgument("no metrics requested".into()));
    }
    let folds = store.folds();
    let mut used = Vec::new();
    let mut dropped = Vec::new();
    let mut failed = Vec::new();
    // p[metric][fold][pair]
    let mut pvals: Vec<Vec<Vec<f64>>> = alloc::vec![alloc::vec![Vec::new(); folds]; metrics.len()];

    'pairs: for &(a, b) in pairs {
        for cfg in [a, b] {
            for fold in 0..folds {
                if store.cell(cfg, fold).is_none() {
                    return Err(Error::MissingCell { config: cfg, fold });
                }
            }
        }
        if store.is_failed(a) || store.is_failed(b) {
            failed.push((a, b));
            continue;
        }
        let mut pair_p: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(folds); metrics.len()];
        for (mi, &metric) in metrics.iter().enumerate() {
            for fold in 0..folds {
                let ma = store
                    .matrix(a, fold, metric)
                    .ok_or(Error::MissingCell { config: a, fold })?;
                let mb = store
                    .matrix(b, fold, metric)
                    .ok_or(Error::MissingCell { config: b, fold })?;
                let (x, y) = aligned(ma, mb);
                match paired_t_test(&x, &y, tail) {
                    Ok(p) => pair_p[mi].push(p),
                    Err(Error::InsufficientData(_)) => {
                        dropped.push((a, b));
                        continue 'pairs;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        for (mi, per_fold) in pair_p.into_iter().enumerate() {
            for (fold, p) in per_fold.into_iter().enumerate() {
                pvals[mi][fold].push(p);
            }
        }
        used.push((a, b));
    }
    if used.is_empty() {
        return Err(Error::NoUsablePairs {
            dropped: dropped.len(),
            failed: failed.len(),
        });
    }
    let metrics = metrics
        .iter()
        .zip(pvals)
        .map(|(&metric, per_fold)| {
            let curve = build_curve(metric, per_fold)?;
            let (dp, dp_plus_sigma) = discriminative_power(&curve);
            Ok(MetricDp {
                metric,
                dp,
                dp_plus_sigma,
                curve,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DpReport {
        metrics,
        folds,
        pairs_used: used,
        pairs_dropped: dropped,
        pairs_failed: failed,
    })
}

/// DP of one metric among pairs that share a given value of one dimension.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DominantRow {
    pub value: f64,
    pub dp: f64,
    pub dp_plus_sigma: f64,
    pub pairs_used: usize,
    /// The constrained universe held fewer than the requested pairs.
    pub shortfall: bool,
}

/// For each value of `dimension`, samples up to `m` pairs among configs
/// with that value (same seed for every value) and computes the DP of
/// `metric`. Rows are sorted by value ascending.
pub fn dominant_analysis(
    store: &MetricStore,
    grid: &Grid,
    dimension: Dimension,
    metric: Metric,
    m: usize,
    seed: u64,
    tail: Tail,
) -> Result<Vec<DominantRow>> {
    let values = grid
        .values(dimension)
        .ok_or_else(|| Error::InvalidArgument(alloc::format!("grid has no `{}` dimension", dimension.name())))?;
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let constraint = FixedDimension { dimension, value };
        let (sample, shortfall) = sample_pairs_up_to(grid, m, seed, Some(constraint))?;
        let report = dp_analysis(store, &sample.pairs, &[metric], tail)?;
        let md = &report.metrics[0];
        rows.push(DominantRow {
            value,
            dp: md.dp,
            dp_plus_sigma: md.dp_plus_sigma,
            pairs_used: report.pairs_used.len(),
            shortfall,
        });
    }
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommenders::Algorithm;
    use alloc::vec;

    fn matrix(metric: Metric, config: usize, fold: usize, users: &[u32], values: &[f64]) -> PerUserMetricMatrix {
        PerUserMetricMatrix {
            metric,
            cutoff: 10,
            config,
            fold,
            users: users.to_vec(),
            values: values.to_vec(),
        }
    }

    fn cell(config: usize, fold: usize, users: &[u32], values: &[f64]) -> CellOutcome {
        CellOutcome::Done(
            Metric::ALL
                .iter()
                .map(|m| matrix(*m, config, fold, users, values))
                .collect(),
        )
    }

    #[test]
    fn self_pairs_give_dp_equal_to_pair_count() {
        let mut store = MetricStore::new(2);
        for c in 0..3 {
            for f in 0..2 {
                store.insert(c, f, cell(c, f, &[0, 1, 2], &[0.1 * c as f64, 0.5, 0.2 * f as f64]));
            }
        }
        let r = dp_analysis(&store, &[(0, 0), (1, 1), (2, 2)], &Metric::ALL, Tail::Two).unwrap();
        for m in &r.metrics {
            assert_eq!(m.dp, 3.0);
            assert_eq!(m.dp_plus_sigma, 3.0);
        }
    }

    #[test]
    fn single_fold_single_pair_dp_is_p_value() {
        let mut store = MetricStore::new(1);
        let x = [0.1, 0.4, 0.35, 0.8];
        let y = [0.2, 0.1, 0.3, 0.5];
        store.insert(0, 0, cell(0, 0, &[1, 2, 3, 4], &x));
        store.insert(1, 0, cell(1, 0, &[1, 2, 3, 4], &y));
        let r = dp_analysis(&store, &[(0, 1)], &[Metric::Ndcg], Tail::Two).unwrap();
        assert_eq!(r.metrics[0].dp, paired_t_test(&x, &y, Tail::Two).unwrap());
    }

    #[test]
    fn users_are_intersected_and_aligned() {
        let a = matrix(Metric::Ndcg, 0, 0, &[1, 3, 5, 7], &[0.1, 0.3, 0.5, 0.7]);
        let b = matrix(Metric::Ndcg, 1, 0, &[0, 3, 4, 7, 9], &[9.0, 3.3, 4.4, 7.7, 9.9]);
        assert_eq!(aligned(&a, &b), (vec![0.3, 0.7], vec![3.3, 7.7]));
    }

    #[test]
    fn thin_pairs_dropped_and_failed_cells_excluded() {
        let mut store = MetricStore::new(2);
        for c in 0..3 {
            for f in 0..2 {
                store.insert(
                    c,
                    f,
                    cell(c, f, &[0, 1, 2], &[0.3 + 0.1 * c as f64, 0.2, 0.1 * (f + c) as f64]),
                );
            }
        }
        // config 3 shares a single user with the others in fold 1
        store.insert(3, 0, cell(3, 0, &[0, 1, 2], &[0.1, 0.2, 0.3]));
        store.insert(3, 1, cell(3, 1, &[2, 8], &[0.1, 0.2]));
        store.insert(4, 0, cell(4, 0, &[0, 1, 2], &[0.1, 0.2, 0.3]));
        store.insert(4, 1, CellOutcome::Failed("diverged".into()));
        let r = dp_analysis(&store, &[(0, 1), (0, 3), (1, 4), (1, 2)], &Metric::ALL, Tail::Two).unwrap();
        assert_eq!(r.pairs_used, [(0, 1), (1, 2)]);
        assert_eq!(r.pairs_dropped, [(0, 3)]);
        assert_eq!(r.pairs_failed, [(1, 4)]);
        for m in &r.metrics {
            assert_eq!(m.curve.pairs, 2);
        }
        assert!(matches!(
            dp_analysis(&store, &[(1, 4)], &Metric::ALL, Tail::Two),
            Err(Error::NoUsablePairs { dropped: 0, failed: 1 })
        ));
        assert!(matches!(
            dp_analysis(&store, &[(0, 9)], &Metric::ALL, Tail::Two),
            Err(Error::MissingCell { config: 9, .. })
        ));
    }

    /// Store whose per-user values depend only on the chosen coordinate.
    fn store_for(grid: &Grid, folds: usize, value_of: impl Fn(&[usize], u32, usize) -> f64) -> MetricStore {
        let mut store = MetricStore::new(folds);
        let users: Vec<u32> = (0..12).collect();
        for idx in 0..grid.len() {
            let coords = grid.coordinates(idx);
            for f in 0..folds {
                let vals: Vec<f64> = users.iter().map(|u| value_of(&coords, *u, f)).collect();
                store.insert(idx, f, cell(idx, f, &users, &vals));
            }
        }
        store
    }

    fn toy_bpr_grid() -> Grid {
        build_grid(&GridSpec::from_lists(
            Algorithm::BprMf,
            &[&[10.0, 20.0, 40.0], &[1.0, 2.0, 4.0], &[0.1, 0.05, 0.025]],
        ))
        .unwrap()
    }

    #[test]
    fn dominant_rows_sorted_and_flag_shortfall() {
        let g = toy_bpr_grid();
        let store = store_for(&g, 2, |c, u, f| {
            0.1 * c[0] as f64 + 0.01 * ((u as usize * 7 + c[1] * 3 + c[2] + f) % 5) as f64
        });
        let rows = dominant_analysis(&store, &g, Dimension::LearningRate, Metric::Ndcg, 40, 3, Tail::Two).unwrap();
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        assert_eq!(values, [0.025, 0.05, 0.1]);
        for r in &rows {
            assert!(r.shortfall);
            assert_eq!(r.pairs_used, 36);
            assert!(r.dp > 0.0 && r.dp <= 36.0);
        }
    }

    #[test]
    fn dominant_values_with_identical_stores_tie() {
        let g = toy_bpr_grid();
        // values ignore the factor coordinate entirely
        let store = store_for(&g, 3, |c, u, f| {
            0.05 * (c[1] + 2 * c[2]) as f64 + 0.01 * ((u as usize + f) % 4) as f64
        });
        let rows = dominant_analysis(&store, &g, Dimension::Factors, Metric::Precision, 5, 11, Tail::Two).unwrap();
        assert!(rows.iter().all(|r| !r.shortfall && r.pairs_used == 5));
        assert_eq!(rows[0].dp, rows[1].dp);
        assert_eq!(rows[1].dp, rows[2].dp);
    }

    #[test]
    fn dominant_matches_step_by_step_recomputation() {
        let g = toy_bpr_grid();
        let store = store_for(&g, 2, |c, u, f| {
            ((c[0] * 5 + c[1] * 3 + c[2]) as f64 * 0.013 + libm::sin(u as f64 * 0.37 + f as f64).abs()) % 1.0
        });
        let rows = dominant_analysis(&store, &g, Dimension::Iterations, Metric::Recall, 6, 99, Tail::Two).unwrap();
        for row in rows {
            let c = FixedDimension {
                dimension: Dimension::Iterations,
                value: row.value,
            };
            let s = sample_pairs(&g, 6, 99, Some(c)).unwrap();
            let mut per_fold = vec![Vec::new(); 2];
            for &(a, b) in &s.pairs {
                for (f, ps) in per_fold.iter_mut().enumerate() {
                    let x = &store.matrix(a, f, Metric::Recall).unwrap().values;
                    let y = &store.matrix(b, f, Metric::Recall).unwrap().values;
                    ps.push(paired_t_test(x, y, Tail::Two).unwrap());
                }
            }
            for ps in &mut per_fold {
                ps.sort_by(|a, b| b.partial_cmp(a).unwrap());
            }
            let dp: f64 = (0..6).map(|r| (per_fold[0][r] + per_fold[1][r]) / 2.0).sum();
            assert!((row.dp - dp).abs() < 1e-12);
        }
    }
}
