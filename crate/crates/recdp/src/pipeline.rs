//! The four stages behind the CLI: prepare splits, sweep the grid, and run
//! DP / dominant-hyper-parameter analyses over the persisted store.
//!
//! Output layout under the run's output directory:
//!
//! ```text
//! run.json                         resolved configuration
//! splits/{train,test,folds,stats}.tsv
//! store/<config-id>/<fold>/        per-cell metric files + cell.json
//! reports/                         DP reports, plot data, dominant tables
//! ```

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::Context;
use rayon::prelude::*;
use recdp_core::analysis::{
    dominant_analysis, dp_analysis, evaluate_model, DominantRow, DpReport, FoldContext, MetricStore,
};
use recdp_core::analysis::{sample_pairs, PairSample};
use recdp_core::analysis::{Dimension, Grid};
use recdp_core::dataset::{filter_core, kfold_assign, sample_stratified, temporal_holdout, Dataset, FoldAssignment};
use recdp_core::metrics::Metric;
use recdp_core::recommenders::train;
use recdp_core::rng::derive_seed;
use recdp_core::Error as CoreError;

use crate::config::{sha256_hex, DatasetSource, RunConfig};
use crate::error::TrainingFailures;
use crate::io::{self, write_atomic, DatasetStats};
use crate::meta::Meta;
use crate::model_io::write_model;
use crate::store::{CellInputs, Store};

// Seed streams. Config indices stay far below 2^40, so these never collide
// with per-cell seeds `derive_seed(master, config, fold)`.
const STREAM_FOLDS: u64 = (1 << 40) | 1;
const STREAM_PAIRS: u64 = (1 << 40) | 2;
const STREAM_DOMINANT: u64 = (1 << 40) | 3;

pub struct Paths {
    pub root: PathBuf,
}

impl Paths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Paths { root: root.into() }
    }

    pub fn run_config(&self) -> PathBuf {
        self.root.join("run.json")
    }

    pub fn splits(&self) -> PathBuf {
        self.root.join("splits")
    }

    pub fn train(&self) -> PathBuf {
        self.splits().join("train.tsv")
    }

    pub fn test(&self) -> PathBuf {
        self.splits().join("test.tsv")
    }

    pub fn folds(&self) -> PathBuf {
        self.splits().join("folds.tsv")
    }

    pub fn stats(&self) -> PathBuf {
        self.splits().join("stats.tsv")
    }

    pub fn store(&self) -> PathBuf {
        self.root.join("store")
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }
}

pub fn meta_of(cfg: &RunConfig) -> Meta {
    Meta::new(cfg.content_hash(), cfg.master_seed)
}

/// Seed of the (config, fold) cell.
pub fn cell_seed(cfg: &RunConfig, config: usize, fold: usize) -> u64 {
    derive_seed(cfg.master_seed, config as u64, fold as u64)
}

pub fn pair_seed(cfg: &RunConfig) -> u64 {
    derive_seed(cfg.master_seed, STREAM_PAIRS, 0)
}

pub fn dominant_seed(cfg: &RunConfig, dimension: Dimension) -> u64 {
    derive_seed(cfg.master_seed, STREAM_DOMINANT, dimension as u64)
}

fn write(path: &Path, body: &str) -> anyhow::Result<()> {
    write_atomic(path, body.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

/// Hash of the non-comment lines of a file, so provenance headers do not
/// change data identity.
fn data_hash(text: &str) -> String {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect();
    sha256_hex(body.as_bytes())
}

pub struct PrepareOutput {
    pub full: DatasetStats,
    pub train: DatasetStats,
    pub test: DatasetStats,
    pub folds: usize,
}

/// Loads the source, filters, samples, splits and assigns folds; writes the
/// canonical split files, the fold file and the statistics summary.
pub fn prepare(cfg: &RunConfig) -> anyhow::Result<PrepareOutput> {
    cfg.validate()?;
    let paths = Paths::new(&cfg.output);
    let meta = meta_of(cfg);
    let raw = match &cfg.dataset {
        DatasetSource::File { path, format } => io::load_interactions(path, format)?,
        DatasetSource::Synthetic(spec) => Dataset::from_records(spec.generate())?,
    };
    let filtered = filter_core(&raw, cfg.min_user_ratings, cfg.min_item_ratings)?;
    let sampled = if cfg.sample_fraction < 1.0 {
        sample_stratified(&filtered, cfg.sample_fraction, cfg.sample_seed)?
    } else {
        filtered
    };
    let split = temporal_holdout(&sampled, cfg.split_ratio)?;
    let fa = kfold_assign(&split.train, cfg.folds, derive_seed(cfg.master_seed, STREAM_FOLDS, 0))?;

    let mut run = serde_json::to_string_pretty(cfg)?;
    run.push('\n');
    write(&paths.run_config(), &run)?;
    write(&paths.train(), &io::canonical_tsv(&split.train, &meta))?;
    write(&paths.test(), &io::canonical_tsv(&split.test, &meta))?;
    write(&paths.folds(), &io::folds_tsv(&fa, &meta))?;
    let out = PrepareOutput {
        full: DatasetStats::of(&sampled),
        train: DatasetStats::of(&split.train),
        test: DatasetStats::of(&split.test),
        folds: fa.k(),
    };
    let stats = io::stats_tsv(&[("full", out.full), ("train", out.train), ("test", out.test)], &meta);
    write(&paths.stats(), &stats)?;
    Ok(out)
}

/// The persisted training split and fold assignment.
pub struct Prepared {
    pub train: Dataset,
    pub folds: FoldAssignment,
    /// Identity of the split data, independent of file headers.
    pub fingerprint: String,
}

pub fn load_prepared(cfg: &RunConfig) -> anyhow::Result<Prepared> {
    let paths = Paths::new(&cfg.output);
    let train_path = paths.train();
    let folds_path = paths.folds();
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| io::DataError::Io {
            path: p.to_owned(),
            source,
        })
    };
    let train_text = read(&train_path).context("run `prepare` first")?;
    let folds_text = read(&folds_path).context("run `prepare` first")?;
    let train = io::load_canonical(&train_path)?;
    let folds = io::load_folds(&folds_path)?;
    if folds.len() != train.n_interactions() {
        return Err(io::DataError::Invalid(format!(
            "fold file has {} rows, training split has {}",
            folds.len(),
            train.n_interactions()
        ))
        .into());
    }
    if folds.k() != cfg.folds {
        anyhow::bail!(
            "splits were prepared with k = {}, configuration asks for {}; re-run `prepare`",
            folds.k(),
            cfg.folds
        );
    }
    Ok(Prepared {
        train,
        folds,
        fingerprint: sha256_hex(format!("{}{}", data_hash(&train_text), data_hash(&folds_text)).as_bytes()),
    })
}

pub fn cell_inputs(cfg: &RunConfig, prepared: &Prepared) -> CellInputs {
    CellInputs {
        data: prepared.fingerprint.clone(),
        eval: cfg.eval_options(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub total: usize,
    /// Cells already complete before this run.
    pub reused: usize,
    pub computed: usize,
    /// `(config index, fold, error)` of every failed cell, sorted.
    pub failed: Vec<(usize, usize, String)>,
}

/// Progress callback: `(cells finished, total, failures so far)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize, usize) + Sync);

/// Runs every missing (config, fold) cell on a pool of `workers` threads.
/// Folds are processed one at a time; configs within a fold in parallel.
/// Each cell writes only its own directory, so runs can be interrupted and
/// resumed. Returns [`TrainingFailures`] if any cell diverged.
pub fn sweep(cfg: &RunConfig, progress: Progress) -> anyhow::Result<SweepSummary> {
    cfg.validate()?;
    let grid = cfg.resolve_grid()?;
    let prepared = load_prepared(cfg)?;
    let paths = Paths::new(&cfg.output);
    let store = Store::new(paths.store());
    let meta = meta_of(cfg);
    let inputs = cell_inputs(cfg, &prepared);
    let opts = cfg.eval_options();
    let k = prepared.folds.k();
    let total = grid.len() * k;

    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut failed = Vec::new();
    let mut reused = 0;
    for (idx, hc) in grid.configs().iter().enumerate() {
        for (fold, todo) in pending.iter_mut().enumerate() {
            match store.valid_manifest(hc, fold, cell_seed(cfg, idx, fold), &inputs) {
                Some(m) => {
                    reused += 1;
                    if let Some(e) = m.error {
                        failed.push((idx, fold, e));
                    }
                }
                None => todo.push(idx),
            }
        }
    }
    let done = AtomicUsize::new(reused);
    let failures = AtomicUsize::new(failed.len());
    progress(reused, total, failed.len());

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build()?;
    let mut computed = 0;
    for (fold, todo) in pending.iter().enumerate() {
        if todo.is_empty() {
            continue;
        }
        let ctx = FoldContext::new(&prepared.train, &prepared.folds, fold, &opts)?;
        let results: Vec<anyhow::Result<Option<(usize, usize, String)>>> = pool.install(|| {
            todo.par_iter()
                .map(|&idx| {
                    let hc = &grid.configs()[idx];
                    let seed = cell_seed(cfg, idx, fold);
                    let outcome = train(hc, &ctx.cv_train, seed).and_then(|model| {
                        let matrices = evaluate_model(&ctx, &model, idx, &opts)?;
                        Ok((model, matrices))
                    });
                    let result = match outcome {
                        Ok((model, matrices)) => {
                            let extra = if cfg.save_models {
                                vec![("model.txt", write_model(&model, &meta))]
                            } else {
                                Vec::new()
                            };
                            store.write_done(hc, fold, seed, &inputs, &matrices, &extra, &meta)?;
                            None
                        }
                        Err(e @ CoreError::TrainingDiverged { .. }) => {
                            let msg = e.to_string();
                            store.write_failed(hc, fold, seed, &inputs, &msg, &meta)?;
                            failures.fetch_add(1, Ordering::Relaxed);
                            Some((idx, fold, msg))
                        }
                        Err(e) => {
                            return Err(anyhow::Error::new(e).context(format!("config {idx} ({hc:?}), fold {fold}")))
                        }
                    };
                    let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                    progress(finished, total, failures.load(Ordering::Relaxed));
                    Ok(result)
                })
                .collect()
        });
        for r in results {
            computed += 1;
            if let Some(f) = r? {
                failed.push(f);
            }
        }
    }
    failed.sort();
    let summary = SweepSummary {
        total,
        reused,
        computed,
        failed,
    };
    if !summary.failed.is_empty() {
        return Err(anyhow::Error::new(TrainingFailures {
            failed: summary.failed.len(),
            total,
        }));
    }
    Ok(summary)
}

/// The grid and every one of its cells, read back from disk.
pub struct LoadedRun {
    pub grid: Grid,
    pub store: MetricStore,
    pub fingerprint: String,
}

pub fn load_run(cfg: &RunConfig) -> anyhow::Result<LoadedRun> {
    cfg.validate()?;
    let grid = cfg.resolve_grid()?;
    let prepared = load_prepared(cfg)?;
    let inputs = cell_inputs(cfg, &prepared);
    let store = Store::new(Paths::new(&cfg.output).store())
        .load(&grid, prepared.folds.k(), &inputs, |c, f| cell_seed(cfg, c, f))?;
    Ok(LoadedRun {
        grid,
        store,
        fingerprint: prepared.fingerprint,
    })
}

pub struct DpOutput {
    pub sample: PairSample,
    pub report: DpReport,
}

/// One pair sample over the whole grid, shared by every fold and metric.
pub fn dp(cfg: &RunConfig, run: &LoadedRun) -> anyhow::Result<DpOutput> {
    let sample = sample_pairs(&run.grid, cfg.pairs, pair_seed(cfg), None)?;
    let report = dp_analysis(&run.store, &sample.pairs, &Metric::ALL, cfg.tail)?;
    Ok(DpOutput { sample, report })
}

pub fn dominant(
    cfg: &RunConfig,
    run: &LoadedRun,
    dimension: Dimension,
    metric: Metric,
) -> anyhow::Result<Vec<DominantRow>> {
    Ok(dominant_analysis(
        &run.store,
        &run.grid,
        dimension,
        metric,
        cfg.pairs,
        dominant_seed(cfg, dimension),
        cfg.tail,
    )?)
}
