//! Text container for trained models.
//!
//! After the provenance header, a model file is a list of `key<TAB>value`
//! lines followed by its tables. Floats are written in shortest
//! round-trip form, so reading a file back reproduces the model exactly.
//!
//! ```text
//! format          recdp-model/1
//! algorithm       bpr-mf
//! factors         F
//! iterations      I
//! learning-rate   η
//! seed            S
//! users           U
//! items           N
//! user-factors                 (U lines of F tab-separated values)
//! item-factors                 (N lines of F tab-separated values)
//! ```
//!
//! Neighborhood models store `k`, `entities` and a `neighbors` table with
//! one line per user (or item): `id:similarity` entries separated by tabs,
//! empty for entities without neighbors. The rating matrix is not stored;
//! it is rebuilt from the fold's training split when the model is read.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context};
use recdp_core::dataset::Dataset;
use recdp_core::recommenders::{KnnModel, MfModel, Model, Neighbor, Orientation};

use crate::meta::Meta;

const FORMAT: &str = "recdp-model/1";

pub fn write_model(model: &Model, meta: &Meta) -> String {
    let mut s = meta.comment_header();
    writeln!(s, "format\t{FORMAT}").unwrap();
    match model {
        Model::Mf(m) => {
            let users = m.user_factors().len() / m.factors();
            let items = m.item_factors().len() / m.factors();
            writeln!(s, "algorithm\tbpr-mf").unwrap();
            writeln!(s, "factors\t{}", m.factors()).unwrap();
            writeln!(s, "iterations\t{}", m.iterations()).unwrap();
            writeln!(s, "learning-rate\t{:?}", m.learning_rate()).unwrap();
            writeln!(s, "seed\t{}", m.seed()).unwrap();
            writeln!(s, "users\t{users}").unwrap();
            writeln!(s, "items\t{items}").unwrap();
            for (name, table) in [("user-factors", m.user_factors()), ("item-factors", m.item_factors())] {
                s.push_str(name);
                s.push('\n');
                for row in table.chunks(m.factors()) {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                    s.push_str(&cells.join("\t"));
                    s.push('\n');
                }
            }
        }
        Model::Knn(m) => {
            let name = match m.orientation() {
                Orientation::User => "user-knn",
                Orientation::Item => "item-knn",
            };
            writeln!(s, "algorithm\t{name}").unwrap();
            writeln!(s, "k\t{}", m.k()).unwrap();
            writeln!(s, "entities\t{}", m.all_neighbors().len()).unwrap();
            s.push_str("neighbors\n");
            for list in m.all_neighbors() {
                let cells: Vec<String> = list.iter().map(|n| format!("{}:{:?}", n.id, n.similarity)).collect();
                s.push_str(&cells.join("\t"));
                s.push('\n');
            }
        }
    }
    s
}

type ContentLines<'a> = std::iter::Filter<std::str::Lines<'a>, fn(&&str) -> bool>;

struct Lines<'a> {
    inner: std::iter::Peekable<ContentLines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let not_comment: fn(&&str) -> bool = |l| !l.starts_with('#');
        Lines {
            inner: text.lines().filter(not_comment).peekable(),
        }
    }

    fn next(&mut self) -> anyhow::Result<&'a str> {
        self.inner.next().ok_or_else(|| anyhow!("model file ends early"))
    }

    fn field(&mut self, key: &str) -> anyhow::Result<&'a str> {
        let line = self.next()?;
        match line.split_once('\t') {
            Some((k, v)) if k == key => Ok(v),
            _ => bail!("expected `{key}`, found `{line}`"),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> anyhow::Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| anyhow!("bad value for `{key}`: `{v}`"))
    }

    fn marker(&mut self, name: &str) -> anyhow::Result<()> {
        let line = self.next()?;
        if line != name {
            bail!("expected `{name}`, found `{line}`");
        }
        Ok(())
    }
}

fn float_row(line: &str, width: usize) -> anyhow::Result<Vec<f64>> {
    let row: Vec<f64> = line
        .split('\t')
        .map(|v| v.parse::<f64>().map_err(|_| anyhow!("bad number `{v}`")))
        .collect::<anyhow::Result<_>>()?;
    if row.len() != width {
        bail!("expected {width} values per row, found {}", row.len());
    }
    Ok(row)
}

/// Reads a model written by [`write_model`]. Neighborhood models take
/// their rating matrix from `cv_train`.
pub fn read_model(text: &str, cv_train: &Dataset) -> anyhow::Result<Model> {
    let mut lines = Lines::new(text);
    let format = lines.field("format")?;
    if format != FORMAT {
        bail!("unsupported model format `{format}`");
    }
    let algorithm = lines.field("algorithm")?;
    match algorithm {
        "bpr-mf" => {
            let factors: usize = lines.parsed("factors")?;
            let iterations: u32 = lines.parsed("iterations")?;
            let learning_rate: f64 = lines.parsed("learning-rate")?;
            let seed: u64 = lines.parsed("seed")?;
            let users: usize = lines.parsed("users")?;
            let items: usize = lines.parsed("items")?;
            let mut table = |name: &str, rows: usize| -> anyhow::Result<Vec<f64>> {
                lines.marker(name)?;
                let mut out = Vec::with_capacity(rows * factors);
                for _ in 0..rows {
                    out.extend(float_row(lines.next()?, factors)?);
                }
                Ok(out)
            };
            let user_factors = table("user-factors", users)?;
            let item_factors = table("item-factors", items)?;
            Ok(Model::Mf(MfModel::from_parts(
                factors,
                iterations,
                learning_rate,
                seed,
                user_factors,
                item_factors,
            )?))
        }
        "user-knn" | "item-knn" => {
            let orientation = if algorithm == "user-knn" {
                Orientation::User
            } else {
                Orientation::Item
            };
            let k: usize = lines.parsed("k")?;
            let entities: usize = lines.parsed("entities")?;
            lines.marker("neighbors")?;
            let mut neighbors = Vec::with_capacity(entities);
            for _ in 0..entities {
                let line = lines.inner.next().unwrap_or("");
                let list = line
                    .split('\t')
                    .filter(|c| !c.is_empty())
                    .map(|cell| {
                        let (id, sim) = cell.split_once(':').ok_or_else(|| anyhow!("bad neighbor `{cell}`"))?;
                        Ok(Neighbor {
                            id: id.parse().context("neighbor id")?,
                            similarity: sim.parse().context("neighbor similarity")?,
                        })
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                neighbors.push(list);
            }
            Ok(Model::Knn(KnnModel::from_parts(
                orientation,
                k,
                neighbors,
                cv_train.rating_matrix(),
            )?))
        }
        other => bail!("unknown algorithm `{other}`"),
    }
}
