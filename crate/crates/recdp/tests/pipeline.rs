use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use recdp::config::{DatasetSource, GridChoice, RunConfig};
use recdp::pipeline::{self, Paths};
use recdp::synth::SyntheticSpec;
use recdp_core::analysis::{run_grid, CellOutcome, GridSpec};
use recdp_core::metrics::Metric;
use recdp_core::recommenders::Algorithm;

fn small(dir: &Path, algorithm: Algorithm, lists: &[&[f64]]) -> RunConfig {
    RunConfig {
        dataset: DatasetSource::Synthetic(SyntheticSpec::small(120, 80, 3)),
        min_user_ratings: 0,
        min_item_ratings: 0,
        folds: 3,
        pairs: 3,
        algorithm,
        grid: GridChoice::Spec(GridSpec::from_lists(algorithm, lists)),
        master_seed: 11,
        output: dir.to_owned(),
        workers: Some(2),
        ..RunConfig::default()
    }
}

fn bpr(dir: &Path) -> RunConfig {
    small(dir, Algorithm::BprMf, &[&[4.0, 8.0], &[3.0], &[0.05, 0.1]])
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            (
                e.path().strip_prefix(root).unwrap().to_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn stored_values_match_in_memory_recomputation() {
    for (alg, lists) in [
        (Algorithm::UserKnn, vec![&[2.0, 10.0][..]]),
        (Algorithm::ItemKnn, vec![&[5.0][..]]),
        (Algorithm::BprMf, vec![&[4.0, 8.0][..], &[3.0][..], &[0.05, 0.1][..]]),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), alg, &lists);
        pipeline::prepare(&cfg).unwrap();
        pipeline::sweep(&cfg, &|_, _, _| {}).unwrap();
        let run = pipeline::load_run(&cfg).unwrap();
        let prepared = pipeline::load_prepared(&cfg).unwrap();
        let memory = run_grid(
            &run.grid,
            &prepared.train,
            &prepared.folds,
            &cfg.eval_options(),
            cfg.master_seed,
        )
        .unwrap();
        let mut compared = 0;
        for (&(config, fold), outcome) in memory.cells() {
            assert!(matches!(outcome, CellOutcome::Done(_)));
            for metric in Metric::ALL {
                let want = memory.matrix(config, fold, metric).unwrap();
                let got = run.store.matrix(config, fold, metric).unwrap();
                assert_eq!(got.users, want.users, "{alg:?} {config}/{fold} {metric:?}");
                for (g, w) in got.values.iter().zip(&want.values) {
                    // persisted at 10 significant digits
                    assert!((g - w).abs() <= 5e-10 * w.abs(), "{alg:?} {metric:?}: {g} vs {w}");
                    compared += 1;
                }
            }
        }
        assert!(compared > 0);
    }
}

#[test]
fn resumed_sweep_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bpr(dir.path());
    pipeline::prepare(&cfg).unwrap();
    let first = pipeline::sweep(&cfg, &|_, _, _| {}).unwrap();
    assert_eq!((first.total, first.computed, first.reused), (12, 12, 0));
    let before = files(dir.path());
    let second = pipeline::sweep(&cfg, &|_, _, _| {}).unwrap();
    assert_eq!((second.computed, second.reused), (0, 12));
    assert_eq!(files(dir.path()), before);
}

#[test]
fn tampered_cell_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bpr(dir.path());
    pipeline::prepare(&cfg).unwrap();
    pipeline::sweep(&cfg, &|_, _, _| {}).unwrap();
    let before = files(dir.path());
    let victim = before
        .keys()
        .find(|p| p.ends_with("ndcg.tsv"))
        .map(|p| dir.path().join(p))
        .unwrap();
    std::fs::write(&victim, "garbage\n").unwrap();
    assert!(pipeline::load_run(&cfg).is_err(), "stale cells must not load");
    let again = pipeline::sweep(&cfg, &|_, _, _| {}).unwrap();
    assert_eq!((again.computed, again.reused), (1, 11));
    assert_eq!(files(dir.path()), before);
}

#[test]
fn changed_evaluation_settings_invalidate_cells() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bpr(dir.path());
    pipeline::prepare(&cfg).unwrap();
    pipeline::sweep(&cfg, &|_, _, _| {}).unwrap();
    cfg.cutoff = 5;
    assert!(pipeline::load_run(&cfg).is_err());
    let again = pipeline::sweep(&cfg, &|_, _, _| {}).unwrap();
    assert_eq!(again.computed, 12);
}

#[test]
fn prepare_is_deterministic_and_folds_cover_training_rows() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = pipeline::prepare(&bpr(a.path())).unwrap();
    pipeline::prepare(&bpr(b.path())).unwrap();
    pipeline::prepare(&bpr(b.path())).unwrap();
    for p in ["train.tsv", "test.tsv", "folds.tsv", "stats.tsv"] {
        let read = |root: &Path| std::fs::read(Paths::new(root).splits().join(p)).unwrap();
        assert_eq!(read(a.path()), read(b.path()), "{p}");
    }
    assert_eq!(out.full.ratings, out.train.ratings + out.test.ratings);
    let prepared = pipeline::load_prepared(&bpr(a.path())).unwrap();
    assert_eq!(prepared.folds.len(), prepared.train.n_interactions());
    assert_eq!(prepared.folds.k(), 3);
}

#[test]
fn dp_and_dominant_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bpr(dir.path());
    pipeline::prepare(&cfg).unwrap();
    pipeline::sweep(&cfg, &|_, _, _| {}).unwrap();
    let run = pipeline::load_run(&cfg).unwrap();
    let first = pipeline::dp(&cfg, &run).unwrap();
    let second = pipeline::dp(&cfg, &run).unwrap();
    assert_eq!(first.report, second.report);
    assert_eq!(first.report.metrics.len(), 6);
    for md in &first.report.metrics {
        assert!(md.dp >= 0.0 && md.dp <= md.dp_plus_sigma);
        assert!(md.dp_plus_sigma <= first.report.pairs_used.len() as f64);
    }
    let dim = run.grid.dimensions()[0].0;
    let rows = pipeline::dominant(&cfg, &run, dim, Metric::Ndcg).unwrap();
    assert_eq!(rows, pipeline::dominant(&cfg, &run, dim, Metric::Ndcg).unwrap());
    assert_eq!(rows.len(), 2);
}
