//! Command-line front end. Every flag overrides the matching field of the
//! JSON run configuration.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use recdp_core::analysis::{Dimension, GridSpec};
use recdp_core::metrics::{Metric, NoveltyDiscount, Threshold};
use recdp_core::recommenders::Algorithm;
use recdp_core::stats::Tail;

use crate::config::{DatasetSource, GridChoice, RunConfig};
use crate::error::{classify, ExitKind};
use crate::io::{write_atomic, Column, FormatDescriptor};
use crate::pipeline::{self, meta_of, Paths};
use crate::report;
use crate::synth::SyntheticSpec;

#[derive(Debug, Parser)]
#[command(
    name = "recdp",
    version,
    about = "Discriminative power of recommender metrics over hyper-parameter grids"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter, sample and split the dataset; assign folds; write statistics.
    Prepare(RunArgs),
    /// Train and evaluate every (config, fold) cell of the grid; resumable.
    Sweep(RunArgs),
    /// Sample config pairs and compute the DP of every metric.
    Dp(RunArgs),
    /// Per-value DP along one or every grid dimension.
    Dominant(DominantArgs),
    /// Print the resolved grid.
    Grid(RunArgs),
}

#[derive(Debug, Args)]
struct DominantArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Dimension to analyse; all dimensions of the algorithm by default.
    #[arg(long)]
    dimension: Option<String>,
    #[arg(long, default_value = "ndcg")]
    metric: String,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration. Without it, `<output>/run.json` is used when
    /// present, else built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Interaction log to read.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Field separator of `--input` (`\t` by default; `whitespace` splits
    /// on blanks).
    #[arg(long)]
    delimiter: Option<String>,
    /// Column order of `--input`, e.g. `user,item,rating,timestamp`.
    #[arg(long)]
    columns: Option<String>,
    /// `--input` starts with a header line.
    #[arg(long)]
    header: bool,
    /// Use a generated corpus: `ml100k` or `small:<users>x<items>`.
    #[arg(long, conflicts_with = "input")]
    synthetic: Option<String>,
    #[arg(long)]
    synthetic_seed: Option<u64>,
    #[arg(long)]
    min_user_ratings: Option<usize>,
    #[arg(long)]
    min_item_ratings: Option<usize>,
    #[arg(long)]
    sample_fraction: Option<f64>,
    #[arg(long)]
    sample_seed: Option<u64>,
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Relevance threshold on validation ratings.
    #[arg(long)]
    tau: Option<f64>,
    /// `inclusive` (rating >= tau) or `strict` (rating > tau).
    #[arg(long)]
    threshold: Option<String>,
    /// Ranking cut-off N.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Novelty rank discount: `none` or `log2`.
    #[arg(long)]
    novelty_discount: Option<String>,
    /// `user-knn`, `item-knn` or `bpr-mf`.
    #[arg(long)]
    algorithm: Option<String>,
    /// Grid preset: `paper-default` or `base2-generators`.
    #[arg(long, conflicts_with = "grid_file")]
    preset: Option<String>,
    /// JSON grid specification.
    #[arg(long)]
    grid_file: Option<PathBuf>,
    /// Number of sampled config pairs, m.
    #[arg(long)]
    pairs: Option<usize>,
    /// `two` or `one` tailed p-values.
    #[arg(long)]
    tail: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Sweep worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Persist trained models next to their metric files.
    #[arg(long)]
    save_models: bool,
}

fn parse_columns(s: &str) -> anyhow::Result<Vec<Column>> {
    s.split(',')
        .map(|c| match c.trim() {
            "user" => Ok(Column::User),
            "item" => Ok(Column::Item),
            "rating" => Ok(Column::Rating),
            "timestamp" => Ok(Column::Timestamp),
            other => bail!("unknown column `{other}`"),
        })
        .collect()
}

fn parse_synthetic(s: &str, seed: u64) -> anyhow::Result<SyntheticSpec> {
    if s == "ml100k" {
        return Ok(SyntheticSpec::movielens_100k_like(seed));
    }
    let dims = s
        .strip_prefix("small:")
        .ok_or_else(|| anyhow!("unknown synthetic corpus `{s}` (expected `ml100k` or `small:<users>x<items>`)"))?;
    let (u, i) = dims
        .split_once('x')
        .ok_or_else(|| anyhow!("expected `small:<users>x<items>`, got `{s}`"))?;
    Ok(SyntheticSpec::small(u.parse()?, i.parse()?, seed))
}

fn pick<T>(name: &str, value: &str, options: &[(&str, T)]) -> anyhow::Result<T>
where
    T: Copy,
{
    options
        .iter()
        .find(|(k, _)| *k == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(k, _)| *k).collect();
            anyhow!("--{name} must be one of {}, got `{value}`", names.join(", "))
        })
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let default_run = Paths::new(self.output.clone().unwrap_or_else(|| RunConfig::default().output)).run_config();
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None if default_run.exists() => RunConfig::from_file(&default_run)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.input {
            let mut format = match &cfg.dataset {
                DatasetSource::File { format, .. } => format.clone(),
                DatasetSource::Synthetic(_) => FormatDescriptor::default(),
            };
            if let Some(d) = &self.delimiter {
                format.delimiter = d.replace("\\t", "\t");
            }
            if let Some(c) = &self.columns {
                format.columns = parse_columns(c)?;
            }
            format.header |= self.header;
            cfg.dataset = DatasetSource::File {
                path: path.clone(),
                format,
            };
        } else if self.delimiter.is_some() || self.columns.is_some() || self.header {
            match &mut cfg.dataset {
                DatasetSource::File { format, .. } => {
                    if let Some(d) = &self.delimiter {
                        format.delimiter = d.replace("\\t", "\t");
                    }
                    if let Some(c) = &self.columns {
                        format.columns = parse_columns(c)?;
                    }
                    format.header |= self.header;
                }
                DatasetSource::Synthetic(_) => bail!("--delimiter/--columns/--header need --input"),
            }
        }
        if let Some(s) = &self.synthetic {
            cfg.dataset = DatasetSource::Synthetic(parse_synthetic(s, self.synthetic_seed.unwrap_or(0))?);
        } else if let Some(seed) = self.synthetic_seed {
            match &mut cfg.dataset {
                DatasetSource::Synthetic(spec) => spec.seed = seed,
                DatasetSource::File { .. } => bail!("--synthetic-seed needs a synthetic dataset"),
            }
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            )*};
        }
        set!(
            min_user_ratings,
            min_item_ratings,
            sample_fraction,
            sample_seed,
            split_ratio,
            folds,
            tau,
            cutoff,
            pairs,
            output
        );
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        cfg.save_models |= self.save_models;
        if let Some(t) = &self.threshold {
            cfg.threshold = pick(
                "threshold",
                t,
                &[("inclusive", Threshold::Inclusive), ("strict", Threshold::Strict)],
            )?;
        }
        if let Some(n) = &self.novelty_discount {
            cfg.novelty_discount = pick(
                "novelty-discount",
                n,
                &[("none", NoveltyDiscount::None), ("log2", NoveltyDiscount::Log2)],
            )?;
        }
        if let Some(t) = &self.tail {
            cfg.tail = pick("tail", t, &[("two", Tail::Two), ("one", Tail::One)])?;
        }
        if let Some(a) = &self.algorithm {
            let algorithm = Algorithm::from_name(a).ok_or_else(|| anyhow!("unknown algorithm `{a}`"))?;
            if algorithm != cfg.algorithm {
                cfg.algorithm = algorithm;
                // a sub-grid and explicit spec belong to the previous algorithm
                cfg.subgrid = None;
                if matches!(cfg.grid, GridChoice::Spec(_)) && self.grid_file.is_none() {
                    cfg.grid = GridChoice::default();
                }
            }
        }
        if let Some(p) = &self.preset {
            cfg.grid = GridChoice::Preset(p.clone());
        }
        if let Some(path) = &self.grid_file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec: GridSpec =
                serde_json::from_str(&text).with_context(|| format!("parsing grid {}", path.display()))?;
            cfg.grid = GridChoice::Spec(spec);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_report(path: &Path, body: &str) -> anyhow::Result<()> {
    write_atomic(path, body.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn cmd_prepare(cfg: &RunConfig) -> anyhow::Result<()> {
    let out = pipeline::prepare(cfg)?;
    let paths = Paths::new(&cfg.output);
    println!("wrote {}", paths.splits().display());
    println!(
        "{:<8}{:>10}{:>10}{:>12}{:>11}",
        "split", "users", "items", "ratings", "sparsity"
    );
    for (name, st) in [("full", out.full), ("train", out.train), ("test", out.test)] {
        println!(
            "{name:<8}{:>10}{:>10}{:>12}{:>10.2}%",
            st.users, st.items, st.ratings, st.sparsity_percent
        );
    }
    println!("{} folds", out.folds);
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> anyhow::Result<()> {
    let step = std::sync::atomic::AtomicUsize::new(0);
    let progress = |done: usize, total: usize, failed: usize| {
        // about a hundred progress lines per sweep at most
        let bucket = done * 100 / total.max(1);
        if done == total || step.fetch_max(bucket + 1, std::sync::atomic::Ordering::Relaxed) <= bucket {
            let mut err = std::io::stderr().lock();
            let _ = writeln!(err, "sweep: {done}/{total} cells, {failed} failed");
        }
    };
    let summary = pipeline::sweep(cfg, &progress)?;
    println!(
        "{} cells: {} computed, {} reused, {} failed",
        summary.total,
        summary.computed,
        summary.reused,
        summary.failed.len()
    );
    Ok(())
}

fn cmd_dp(cfg: &RunConfig) -> anyhow::Result<()> {
    let run = pipeline::load_run(cfg)?;
    let out = pipeline::dp(cfg, &run)?;
    let meta = meta_of(cfg);
    let reports = Paths::new(&cfg.output).reports();
    let alg = cfg.algorithm.name();
    let json = report::dp_json(&report::DpInputs {
        meta: &meta,
        fingerprint: &run.fingerprint,
        grid: &run.grid,
        eval: cfg.eval_options(),
        tail: cfg.tail,
        sample: &out.sample,
        report: &out.report,
    });
    write_report(&reports.join(format!("dp-{alg}.json")), &json)?;
    for m in &out.report.metrics {
        write_report(
            &reports.join(format!("plot-{alg}-{}.tsv", m.metric.name())),
            &report::plot_tsv(&m.curve, &meta),
        )?;
    }
    let summary = report::dp_summary(&out.report, cfg.algorithm);
    write_report(
        &reports.join(format!("dp-{alg}.txt")),
        &format!("{}{summary}", meta.comment_header()),
    )?;
    print!("{summary}");
    Ok(())
}

fn cmd_dominant(cfg: &RunConfig, dimension: Option<&str>, metric: &str) -> anyhow::Result<()> {
    let metric = Metric::from_name(metric).ok_or_else(|| anyhow!("unknown metric `{metric}`"))?;
    if Dimension::for_algorithm(cfg.algorithm).len() < 2 {
        // fixing the only dimension leaves a single configuration per value
        bail!(
            "dominant analysis needs at least two hyper-parameter dimensions; {} grids have one",
            cfg.algorithm.name()
        );
    }
    let dims: Vec<Dimension> = match dimension {
        Some(name) => {
            let d = Dimension::from_name(name).ok_or_else(|| anyhow!("unknown dimension `{name}`"))?;
            if !Dimension::for_algorithm(cfg.algorithm).contains(&d) {
                bail!("{} grids have no `{name}` dimension", cfg.algorithm.name());
            }
            vec![d]
        }
        None => Dimension::for_algorithm(cfg.algorithm).to_vec(),
    };
    let run = pipeline::load_run(cfg)?;
    let meta = meta_of(cfg);
    let reports = Paths::new(&cfg.output).reports();
    for dim in dims {
        let rows = pipeline::dominant(cfg, &run, dim, metric)?;
        write_report(
            &reports.join(format!(
                "dominant-{}-{}-{}.tsv",
                cfg.algorithm.name(),
                dim.name(),
                metric.name()
            )),
            &report::dominant_tsv(&rows, dim, metric, &meta),
        )?;
        print!("{}", report::dominant_summary(&rows, dim, metric));
    }
    Ok(())
}

fn cmd_grid(cfg: &RunConfig) -> anyhow::Result<()> {
    let grid = cfg.resolve_grid()?;
    print!("{}", report::grid_tsv(&grid, &meta_of(cfg)));
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Prepare(a) => cmd_prepare(&a.resolve()?),
        Command::Sweep(a) => cmd_sweep(&a.resolve()?),
        Command::Dp(a) => cmd_dp(&a.resolve()?),
        Command::Dominant(d) => cmd_dominant(&d.run.resolve()?, d.dimension.as_deref(), &d.metric),
        Command::Grid(a) => cmd_grid(&a.resolve()?),
    }
}

/// Parses `args` (program name first), runs the command and maps the
/// outcome to an exit status.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitKind::Usage as u8 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e) as u8)
        }
    }
}
