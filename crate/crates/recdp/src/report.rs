//! Report documents: DP report JSON, plot data, and plain-text tables.

use std::fmt::Write as _;

use recdp_core::analysis::PairSample;
use recdp_core::analysis::{Dimension, Grid};
use recdp_core::analysis::{DominantRow, DpReport};
use recdp_core::metrics::{EvalOptions, Metric};
use recdp_core::recommenders::{Algorithm, HyperConfig};
use recdp_core::stats::{PValueCurve, Tail};
use serde::Serialize;

use crate::meta::Meta;
use crate::numfmt::sig;
use crate::store::config_id;

const DIGITS: usize = 10;

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct PairEntry {
    a: usize,
    b: usize,
    config_a: HyperConfig,
    config_b: HyperConfig,
    id_a: String,
    id_b: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct DpDocument<'a> {
    meta: &'a Meta,
    dataset_fingerprint: &'a str,
    algorithm: Algorithm,
    grid: &'a Grid,
    grid_size: usize,
    evaluation: EvalOptions,
    tail: Tail,
    folds: usize,
    pair_seed: u64,
    pairs_requested: usize,
    pair_universe: u64,
    pairs: Vec<PairEntry>,
    result: &'a DpReport,
}

pub struct DpInputs<'a> {
    pub meta: &'a Meta,
    pub fingerprint: &'a str,
    pub grid: &'a Grid,
    pub eval: EvalOptions,
    pub tail: Tail,
    pub sample: &'a PairSample,
    pub report: &'a DpReport,
}

/// The full report: provenance, grid, seeds, pair list and per-metric
/// curves with DP and DP+σ.
pub fn dp_json(d: &DpInputs) -> String {
    let cfgs = d.grid.configs();
    let doc = DpDocument {
        meta: d.meta,
        dataset_fingerprint: d.fingerprint,
        algorithm: d.grid.algorithm(),
        grid: d.grid,
        grid_size: d.grid.len(),
        evaluation: d.eval,
        tail: d.tail,
        folds: d.report.folds,
        pair_seed: d.sample.seed,
        pairs_requested: d.sample.len(),
        pair_universe: d.sample.universe,
        pairs: d
            .sample
            .pairs
            .iter()
            .map(|&(a, b)| PairEntry {
                a,
                b,
                config_a: cfgs[a],
                config_b: cfgs[b],
                id_a: config_id(&cfgs[a]),
                id_b: config_id(&cfgs[b]),
            })
            .collect(),
        result: d.report,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

/// `rank<TAB>mean_p<TAB>sigma`, ranks from 1.
pub fn plot_tsv(curve: &PValueCurve, meta: &Meta) -> String {
    let mut s = meta.comment_header();
    writeln!(s, "# metric {}", curve.metric.name()).unwrap();
    s.push_str("rank\tmean_p\tsigma\n");
    for (rank, (m, sd)) in curve.mean.iter().zip(&curve.sigma).enumerate() {
        writeln!(s, "{}\t{}\t{}", rank + 1, sig(*m, DIGITS), sig(*sd, DIGITS)).unwrap();
    }
    s
}

/// Metric / DP / DP+σ table. The lowest DP (most discriminative) is
/// wrapped in `**`, the highest is flagged `(worst)`.
pub fn dp_summary(report: &DpReport, algorithm: Algorithm) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{}: {} pairs used, {} dropped, {} touching failed cells, {} folds",
        algorithm.name(),
        report.pairs_used.len(),
        report.pairs_dropped.len(),
        report.pairs_failed.len(),
        report.folds
    )
    .unwrap();
    let best = report.metrics.iter().map(|m| m.dp).fold(f64::INFINITY, f64::min);
    let worst = report.metrics.iter().map(|m| m.dp).fold(f64::NEG_INFINITY, f64::max);
    writeln!(s, "{:<14}{:>12}{:>12}", "metric", "DP", "DP+sigma").unwrap();
    for m in &report.metrics {
        let name = if m.dp == best {
            format!("**{}**", m.metric.name())
        } else {
            m.metric.name().to_owned()
        };
        let flag = if m.dp == worst && worst != best {
            "  (worst)"
        } else {
            ""
        };
        writeln!(s, "{name:<14}{:>12.4}{:>12.4}{flag}", m.dp, m.dp_plus_sigma).unwrap();
    }
    s
}

/// `value<TAB>dp<TAB>dp_plus_sigma<TAB>pairs_used<TAB>shortfall<TAB>best`;
/// the row with the lowest DP is marked `*` in the last column.
pub fn dominant_tsv(rows: &[DominantRow], dimension: Dimension, metric: Metric, meta: &Meta) -> String {
    let mut s = meta.comment_header();
    writeln!(s, "# dimension {} metric {}", dimension.name(), metric.name()).unwrap();
    s.push_str("value\tdp\tdp_plus_sigma\tpairs_used\tshortfall\tbest\n");
    let best = best_row(rows);
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            sig(r.value, DIGITS),
            sig(r.dp, DIGITS),
            sig(r.dp_plus_sigma, DIGITS),
            r.pairs_used,
            r.shortfall,
            if Some(i) == best { "*" } else { "" }
        )
        .unwrap();
    }
    s
}

/// Index of the row with the lowest DP (first on ties).
pub fn best_row(rows: &[DominantRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .min_by(|a, b| a.1.dp.total_cmp(&b.1.dp).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

/// Human-readable dominant table.
pub fn dominant_summary(rows: &[DominantRow], dimension: Dimension, metric: Metric) -> String {
    let mut s = String::new();
    writeln!(s, "{} DP by {}:", metric.name(), dimension.name()).unwrap();
    writeln!(s, "{:>16}{:>10}{:>10}{:>7}", "value", "DP", "DP+sigma", "pairs").unwrap();
    let best = best_row(rows);
    for (i, r) in rows.iter().enumerate() {
        let mark = if Some(i) == best { "  <- best" } else { "" };
        let short = if r.shortfall { " (shortfall)" } else { "" };
        writeln!(
            s,
            "{:>16}{:>10.4}{:>10.4}{:>7}{short}{mark}",
            sig(r.value, DIGITS),
            r.dp,
            r.dp_plus_sigma,
            r.pairs_used
        )
        .unwrap();
    }
    s
}

/// `dimension<TAB>index<TAB>value` for every dimension of a grid.
pub fn grid_tsv(grid: &Grid, meta: &Meta) -> String {
    let mut s = meta.comment_header();
    writeln!(
        s,
        "# algorithm {}, {} configurations",
        grid.algorithm().name(),
        grid.len()
    )
    .unwrap();
    s.push_str("dimension\tindex\tvalue\n");
    for (dim, values) in grid.dimensions() {
        for (i, v) in values.iter().enumerate() {
            writeln!(s, "{}\t{i}\t{}", dim.name(), sig(*v, DIGITS)).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use recdp_core::analysis::MetricDp;
    use recdp_core::stats::build_curve;

    fn report() -> DpReport {
        let metrics = [(Metric::Ndcg, 0.2), (Metric::Precision, 0.5), (Metric::Epc, 0.9)]
            .into_iter()
            .map(|(metric, p)| {
                let curve = build_curve(metric, vec![vec![p, p / 2.0], vec![p, p / 4.0]]).unwrap();
                let (dp, dp_plus_sigma) = recdp_core::stats::discriminative_power(&curve);
                MetricDp {
                    metric,
                    dp,
                    dp_plus_sigma,
                    curve,
                }
            })
            .collect();
        DpReport {
            metrics,
            folds: 2,
            pairs_used: vec![(0, 1), (0, 2)],
            pairs_dropped: vec![],
            pairs_failed: vec![],
        }
    }

    #[test]
    fn summary_marks_best_and_worst() {
        let s = dp_summary(&report(), Algorithm::UserKnn);
        assert!(s.contains("**ndcg**"));
        assert!(s.lines().any(|l| l.starts_with("epc") && l.ends_with("(worst)")));
        assert!(!s.contains("**precision**"));
    }

    #[test]
    fn plot_rows_are_rank_mean_sigma() {
        let r = report();
        let text = plot_tsv(&r.metrics[0].curve, &Meta::new("h", 0));
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "rank\tmean_p\tsigma");
        assert_eq!(rows[1], "1\t0.2\t0");
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn dominant_best_is_lowest_dp() {
        let row = |value: f64, dp: f64| DominantRow {
            value,
            dp,
            dp_plus_sigma: dp,
            pairs_used: 3,
            shortfall: false,
        };
        let rows = [row(1.0, 2.0), row(2.0, 0.5), row(4.0, 0.5)];
        assert_eq!(best_row(&rows), Some(1));
        let t = dominant_tsv(&rows, Dimension::Iterations, Metric::Ndcg, &Meta::new("h", 0));
        assert!(t.contains("2\t0.5\t0.5\t3\tfalse\t*\n"));
        assert!(t.contains("4\t0.5\t0.5\t3\tfalse\t\n"));
    }
}
