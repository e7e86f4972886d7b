//! Run configuration: one JSON document per run, overridable from flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use recdp_core::analysis::{build_grid, subgrid_around_best, Grid, GridSpec};
use recdp_core::metrics::{EvalOptions, NoveltyDiscount, Threshold};
use recdp_core::recommenders::{Algorithm, HyperConfig};
use recdp_core::stats::Tail;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::FormatDescriptor;
use crate::synth::SyntheticSpec;

/// Where interactions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    File {
        path: PathBuf,
        #[serde(default)]
        format: FormatDescriptor,
    },
    Synthetic(SyntheticSpec),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticSpec::default())
    }
}

/// A named preset or an explicit grid description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridChoice {
    /// `paper-default` (the reference value lists) or `base2-generators`
    /// (the base-2 exponent ranges behind them).
    Preset(String),
    Spec(GridSpec),
}

impl Default for GridChoice {
    fn default() -> Self {
        GridChoice::Preset(DEFAULT_PRESET.to_owned())
    }
}

pub const DEFAULT_PRESET: &str = "paper-default";
pub const BASE2_GENERATORS: &str = "base2-generators";

/// Restricts the grid to `radii[d]` neighbors of `best` along each dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SubgridChoice {
    pub best: HyperConfig,
    pub radii: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    /// Users with fewer interactions are dropped before items (0 disables).
    pub min_user_ratings: usize,
    /// Items with fewer interactions are dropped after the user pass.
    pub min_item_ratings: usize,
    /// Rating-stratified sampling fraction, applied after filtering.
    pub sample_fraction: f64,
    pub sample_seed: u64,
    /// Per-user chronological train share.
    pub split_ratio: f64,
    pub folds: usize,
    pub tau: f64,
    pub threshold: Threshold,
    pub cutoff: usize,
    pub novelty_discount: NoveltyDiscount,
    pub algorithm: Algorithm,
    pub grid: GridChoice,
    pub subgrid: Option<SubgridChoice>,
    /// Number of sampled config pairs, m.
    pub pairs: usize,
    pub tail: Tail,
    pub master_seed: u64,
    pub output: PathBuf,
    /// Worker threads for the sweep; defaults to available parallelism.
    pub workers: Option<usize>,
    /// Also persist trained models next to their metric files.
    pub save_models: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetSource::default(),
            min_user_ratings: 20,
            min_item_ratings: 25,
            sample_fraction: 1.0,
            sample_seed: 0,
            split_ratio: 0.8,
            folds: 10,
            tau: 4.0,
            threshold: Threshold::Inclusive,
            cutoff: 10,
            novelty_discount: NoveltyDiscount::None,
            algorithm: Algorithm::BprMf,
            grid: GridChoice::default(),
            subgrid: None,
            pairs: 25,
            tail: Tail::Two,
            master_seed: 0,
            output: PathBuf::from("recdp-out"),
            workers: None,
            save_models: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.folds < 2 {
            bail!("folds must be >= 2, got {}", self.folds);
        }
        if self.pairs < 1 {
            bail!("pairs must be >= 1");
        }
        if self.cutoff < 1 {
            bail!("cutoff must be >= 1");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            bail!("split-ratio must be in (0, 1), got {}", self.split_ratio);
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            bail!("sample-fraction must be in (0, 1], got {}", self.sample_fraction);
        }
        if !self.tau.is_finite() {
            bail!("tau must be finite");
        }
        if self.workers == Some(0) {
            bail!("workers must be >= 1");
        }
        if let GridChoice::Spec(spec) = &self.grid {
            if spec.algorithm != self.algorithm {
                bail!(
                    "grid spec is for {}, run is for {}",
                    spec.algorithm.name(),
                    self.algorithm.name()
                );
            }
        }
        Ok(())
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            cutoff: self.cutoff,
            tau: self.tau,
            threshold: self.threshold,
            novelty_discount: self.novelty_discount,
        }
    }

    /// Resolves the grid, including the optional sub-grid restriction.
    pub fn resolve_grid(&self) -> anyhow::Result<Grid> {
        let spec = match &self.grid {
            GridChoice::Preset(name) => preset(name, self.algorithm)?,
            GridChoice::Spec(spec) => spec.clone(),
        };
        let grid = build_grid(&spec)?;
        Ok(match &self.subgrid {
            None => grid,
            Some(sub) => subgrid_around_best(&grid, &sub.best, &sub.radii)?,
        })
    }

    /// Hash of everything that can change results. The output directory and
    /// worker count are left out so relocated or re-scheduled runs agree.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = PathBuf::new();
        canonical.workers = None;
        canonical.save_models = false;
        sha256_hex(serde_json::to_string(&canonical).expect("config serializes").as_bytes())
    }
}

pub fn preset(name: &str, algorithm: Algorithm) -> anyhow::Result<GridSpec> {
    match name {
        DEFAULT_PRESET => Ok(GridSpec::paper_default(algorithm)),
        BASE2_GENERATORS => Ok(GridSpec::base2_generators(algorithm)),
        other => bail!("unknown grid preset `{other}` (expected `{DEFAULT_PRESET}` or `{BASE2_GENERATORS}`)"),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
