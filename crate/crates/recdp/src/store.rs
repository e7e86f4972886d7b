//! On-disk metric store: `store/<config-id>/<fold>/`.
//!
//! Each cell directory holds one `<metric>.tsv` per metric and a
//! `cell.json` manifest written last. A cell counts as complete only when
//! its manifest matches the current inputs (data fingerprint, evaluation
//! options, hyper-parameters, seed) and every listed file still has the
//! recorded SHA-256. Anything else is recomputed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use recdp_core::analysis::Grid;
use recdp_core::analysis::{CellOutcome, MetricStore};
use recdp_core::metrics::{EvalOptions, Metric, PerUserMetricMatrix};
use recdp_core::recommenders::HyperConfig;
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::io::write_atomic;
use crate::meta::Meta;
use crate::numfmt::sig;

/// Significant digits of persisted metric values.
pub const VALUE_DIGITS: usize = 10;

/// Content hash of a hyper-parameter point; names its store directory.
pub fn config_id(cfg: &HyperConfig) -> String {
    let json = serde_json::to_string(cfg).expect("hyper-parameters serialize");
    sha256_hex(json.as_bytes())[..16].to_owned()
}

/// What a cell's results depend on besides its hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CellInputs {
    /// Hash of the training split and fold file.
    pub data: String,
    pub eval: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CellManifest {
    pub meta: Meta,
    pub config: HyperConfig,
    pub config_id: String,
    pub fold: usize,
    pub seed: u64,
    pub inputs: CellInputs,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    /// File name -> SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

pub struct Store {
    root: PathBuf,
}

fn metric_file(metric: Metric) -> String {
    format!("{}.tsv", metric.name())
}

/// `metric<TAB>N<TAB>config-id<TAB>fold`, then `user<TAB>value` lines.
pub fn matrix_tsv(m: &PerUserMetricMatrix, config_id: &str, meta: &Meta) -> String {
    let mut s = meta.comment_header();
    writeln!(s, "{}\t{}\t{}\t{}", m.metric.name(), m.cutoff, config_id, m.fold).unwrap();
    for (u, v) in m.users.iter().zip(&m.values) {
        writeln!(s, "{u}\t{}", sig(*v, VALUE_DIGITS)).unwrap();
    }
    s
}

fn parse_matrix(text: &str, config: usize, path: &Path) -> anyhow::Result<PerUserMetricMatrix> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let head = lines
        .next()
        .ok_or_else(|| anyhow!("{}: empty metric file", path.display()))?;
    let fields: Vec<&str> = head.split('\t').collect();
    let [metric, cutoff, _, fold] = fields[..] else {
        bail!("{}: bad header `{head}`", path.display());
    };
    let metric = Metric::from_name(metric).ok_or_else(|| anyhow!("{}: unknown metric `{metric}`", path.display()))?;
    let mut users = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let (u, v) = line
            .split_once('\t')
            .ok_or_else(|| anyhow!("{}: bad row `{line}`", path.display()))?;
        users.push(u.parse()?);
        values.push(v.parse()?);
    }
    Ok(PerUserMetricMatrix {
        metric,
        cutoff: cutoff.parse()?,
        config,
        fold: fold.parse()?,
        users,
        values,
    })
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn cell_dir(&self, cfg: &HyperConfig, fold: usize) -> PathBuf {
        self.root.join(config_id(cfg)).join(fold.to_string())
    }

    fn manifest_path(&self, cfg: &HyperConfig, fold: usize) -> PathBuf {
        self.cell_dir(cfg, fold).join("cell.json")
    }

    /// The manifest of a complete, current cell, or `None` if the cell must
    /// be (re)computed.
    pub fn valid_manifest(
        &self,
        cfg: &HyperConfig,
        fold: usize,
        seed: u64,
        inputs: &CellInputs,
    ) -> Option<CellManifest> {
        let text = fs::read_to_string(self.manifest_path(cfg, fold)).ok()?;
        let m: CellManifest = serde_json::from_str(&text).ok()?;
        if m.config != *cfg || m.fold != fold || m.seed != seed || m.inputs != *inputs {
            return None;
        }
        let dir = self.cell_dir(cfg, fold);
        for (name, hash) in &m.files {
            let bytes = fs::read(dir.join(name)).ok()?;
            if sha256_hex(&bytes) != *hash {
                return None;
            }
        }
        if m.status == CellStatus::Done && m.files.len() != Metric::ALL.len() {
            return None;
        }
        Some(m)
    }

    /// Persists a finished cell: metric files first, manifest last.
    #[allow(clippy::too_many_arguments)]
    pub fn write_done(
        &self,
        cfg: &HyperConfig,
        fold: usize,
        seed: u64,
        inputs: &CellInputs,
        matrices: &[PerUserMetricMatrix],
        extra: &[(&str, String)],
        meta: &Meta,
    ) -> anyhow::Result<()> {
        let dir = self.cell_dir(cfg, fold);
        let id = config_id(cfg);
        let mut files = BTreeMap::new();
        for m in matrices {
            let body = matrix_tsv(m, &id, meta);
            let name = metric_file(m.metric);
            write_atomic(&dir.join(&name), body.as_bytes()).with_context(|| format!("writing {}", dir.display()))?;
            files.insert(name, sha256_hex(body.as_bytes()));
        }
        for (name, body) in extra {
            write_atomic(&dir.join(name), body.as_bytes())?;
        }
        self.write_manifest(cfg, fold, seed, inputs, CellStatus::Done, None, files, meta)
    }

    pub fn write_failed(
        &self,
        cfg: &HyperConfig,
        fold: usize,
        seed: u64,
        inputs: &CellInputs,
        error: &str,
        meta: &Meta,
    ) -> anyhow::Result<()> {
        self.write_manifest(
            cfg,
            fold,
            seed,
            inputs,
            CellStatus::Failed,
            Some(error.to_owned()),
            BTreeMap::new(),
            meta,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn write_manifest(
        &self,
        cfg: &HyperConfig,
        fold: usize,
        seed: u64,
        inputs: &CellInputs,
        status: CellStatus,
        error: Option<String>,
        files: BTreeMap<String, String>,
        meta: &Meta,
    ) -> anyhow::Result<()> {
        let manifest = CellManifest {
            meta: meta.clone(),
            config: *cfg,
            config_id: config_id(cfg),
            fold,
            seed,
            inputs: inputs.clone(),
            status,
            error,
            files,
        };
        let mut body = serde_json::to_string_pretty(&manifest)?;
        body.push('\n');
        write_atomic(&self.manifest_path(cfg, fold), body.as_bytes())?;
        Ok(())
    }

    /// Loads every (config, fold) cell of `grid` into an in-memory store,
    /// keyed by grid index. `seed_of(config, fold)` gives each cell's seed.
    pub fn load(
        &self,
        grid: &Grid,
        folds: usize,
        inputs: &CellInputs,
        seed_of: impl Fn(usize, usize) -> u64,
    ) -> anyhow::Result<MetricStore> {
        let mut store = MetricStore::new(folds);
        let mut missing = 0usize;
        for (idx, cfg) in grid.configs().iter().enumerate() {
            for fold in 0..folds {
                let Some(manifest) = self.valid_manifest(cfg, fold, seed_of(idx, fold), inputs) else {
                    missing += 1;
                    continue;
                };
                let outcome = match manifest.status {
                    CellStatus::Failed => CellOutcome::Failed(manifest.error.unwrap_or_default()),
                    CellStatus::Done => {
                        let dir = self.cell_dir(cfg, fold);
                        let matrices = Metric::ALL
                            .iter()
                            .map(|m| {
                                let path = dir.join(metric_file(*m));
                                let text = fs::read_to_string(&path)?;
                                parse_matrix(&text, idx, &path)
                            })
                            .collect::<anyhow::Result<Vec<_>>>()?;
                        CellOutcome::Done(matrices)
                    }
                };
                store.insert(idx, fold, outcome);
            }
        }
        if missing > 0 {
            bail!(
                "{missing} of {} cells are missing or stale under {}; run `sweep` first",
                grid.len() * folds,
                self.root.display()
            );
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use recdp_core::metrics::Metric;

    fn matrices(fold: usize) -> Vec<PerUserMetricMatrix> {
        Metric::ALL
            .iter()
            .map(|&metric| PerUserMetricMatrix {
                metric,
                cutoff: 10,
                config: 0,
                fold,
                users: vec![0, 3, 7],
                values: vec![0.1, 1.0 / 3.0, 0.0],
            })
            .collect()
    }

    fn inputs() -> CellInputs {
        CellInputs {
            data: "d".into(),
            eval: EvalOptions::default(),
        }
    }

    #[test]
    fn written_cells_reload_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let cfg = HyperConfig::UserKnn { neighbors: 4 };
        let meta = Meta::new("h", 1);
        store
            .write_done(&cfg, 0, 5, &inputs(), &matrices(0), &[], &meta)
            .unwrap();
        assert!(store.valid_manifest(&cfg, 0, 5, &inputs()).is_some());
        assert!(store.valid_manifest(&cfg, 0, 6, &inputs()).is_none());
        assert!(store.valid_manifest(&cfg, 1, 5, &inputs()).is_none());

        let grid = Grid::from_values(
            recdp_core::recommenders::Algorithm::UserKnn,
            vec![(recdp_core::analysis::Dimension::Neighbors, vec![4.0])],
        )
        .unwrap();
        let loaded = store.load(&grid, 1, &inputs(), |_, _| 5).unwrap();
        let m = loaded.matrix(0, 0, Metric::Recall).unwrap();
        assert_eq!(m.users, [0, 3, 7]);
        assert_eq!(m.values, [0.1, 0.3333333333, 0.0]);
        assert!(store.load(&grid, 2, &inputs(), |_, _| 5).is_err());
    }

    #[test]
    fn tampered_file_invalidates_cell() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let cfg = HyperConfig::ItemKnn { neighbors: 2 };
        let meta = Meta::new("h", 1);
        store
            .write_done(&cfg, 0, 5, &inputs(), &matrices(0), &[], &meta)
            .unwrap();
        let f = store.cell_dir(&cfg, 0).join("ndcg.tsv");
        let mut text = fs::read_to_string(&f).unwrap();
        text.push_str("9\t0.5\n");
        fs::write(&f, text).unwrap();
        assert!(store.valid_manifest(&cfg, 0, 5, &inputs()).is_none());
    }

    #[test]
    fn failed_cells_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let cfg = HyperConfig::BprMf {
            factors: 2,
            iterations: 1,
            learning_rate: 1e9,
        };
        store
            .write_failed(&cfg, 1, 3, &inputs(), "diverged", &Meta::new("h", 1))
            .unwrap();
        let m = store.valid_manifest(&cfg, 1, 3, &inputs()).unwrap();
        assert_eq!(m.status, CellStatus::Failed);
        assert_eq!(m.error.as_deref(), Some("diverged"));
    }

    #[test]
    fn config_ids_are_stable_and_distinct() {
        let a = config_id(&HyperConfig::UserKnn { neighbors: 10 });
        assert_eq!(a.len(), 16);
        assert_eq!(a, config_id(&HyperConfig::UserKnn { neighbors: 10 }));
        assert_ne!(a, config_id(&HyperConfig::ItemKnn { neighbors: 10 }));
    }
}
