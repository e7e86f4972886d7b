//! Interaction logs, canonical split files, fold files and dataset
//! statistics.
//!
//! Lines starting with `#` are comments in every file this module reads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use recdp_core::dataset::{Dataset, FoldAssignment, RawRecord};
use serde::{Deserialize, Serialize};

use crate::meta::Meta;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}: no interactions")]
    Empty(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes `contents` to `path` via a sibling temporary file and a rename,
/// so readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Column {
    User,
    Item,
    Rating,
    Timestamp,
}

/// How to read a delimiter-separated interaction log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FormatDescriptor {
    /// Field separator; may be several characters (e.g. `::`). The value
    /// `whitespace` splits on runs of blanks.
    pub delimiter: String,
    /// Position of each field; extra trailing fields are ignored.
    pub columns: Vec<Column>,
    /// Skip the first non-comment line.
    pub header: bool,
    /// Inclusive rating scale.
    pub rating_min: f64,
    pub rating_max: f64,
}

impl Default for FormatDescriptor {
    fn default() -> Self {
        FormatDescriptor {
            delimiter: "\t".to_owned(),
            columns: vec![Column::User, Column::Item, Column::Rating, Column::Timestamp],
            header: false,
            rating_min: 1.0,
            rating_max: 5.0,
        }
    }
}

impl FormatDescriptor {
    /// MovieLens-1M `ratings.dat`: `user::item::rating::timestamp`.
    pub fn movielens_dat() -> Self {
        FormatDescriptor {
            delimiter: "::".to_owned(),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<[usize; 4], DataError> {
        let mut pos = [usize::MAX; 4];
        for (idx, c) in self.columns.iter().enumerate() {
            let slot = &mut pos[*c as usize];
            if *slot != usize::MAX {
                return Err(DataError::Invalid(format!("column {c:?} listed twice")));
            }
            *slot = idx;
        }
        if pos.contains(&usize::MAX) {
            return Err(DataError::Invalid(
                "format needs user, item, rating and timestamp columns".into(),
            ));
        }
        if self.delimiter.is_empty() {
            return Err(DataError::Invalid("empty delimiter".into()));
        }
        Ok(pos)
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        if self.delimiter == "whitespace" {
            line.split_whitespace().collect()
        } else {
            line.split(self.delimiter.as_str()).collect()
        }
    }
}

/// Parses an interaction log into raw records, naming the line of the
/// first malformed record.
pub fn read_records(path: &Path, format: &FormatDescriptor) -> Result<Vec<RawRecord>, DataError> {
    let pos = format.validate()?;
    let text = read(path)?;
    let mut out = Vec::new();
    let mut header_pending = format.header;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let err = |message: String| DataError::Parse {
            path: path.to_owned(),
            line: idx + 1,
            message,
        };
        let fields = format.split(line);
        let need = pos.iter().max().unwrap() + 1;
        if fields.len() < need {
            return Err(err(format!("expected at least {need} fields, found {}", fields.len())));
        }
        let field = |c: Column| fields[pos[c as usize]].trim();
        let rating: f64 = field(Column::Rating)
            .parse()
            .map_err(|_| err(format!("bad rating `{}`", field(Column::Rating))))?;
        if !(rating >= format.rating_min && rating <= format.rating_max) {
            return Err(err(format!(
                "rating {rating} outside [{}, {}]",
                format.rating_min, format.rating_max
            )));
        }
        let timestamp: i64 = field(Column::Timestamp)
            .parse()
            .map_err(|_| err(format!("bad timestamp `{}`", field(Column::Timestamp))))?;
        let (user, item) = (field(Column::User), field(Column::Item));
        if user.is_empty() || item.is_empty() {
            return Err(err("empty user or item id".into()));
        }
        out.push(RawRecord {
            user: user.to_owned(),
            item: item.to_owned(),
            rating,
            timestamp,
        });
    }
    if out.is_empty() {
        return Err(DataError::Empty(path.to_owned()));
    }
    Ok(out)
}

/// Loads a log into a deduplicated dataset with dense ids.
pub fn load_interactions(path: &Path, format: &FormatDescriptor) -> Result<Dataset, DataError> {
    let records = read_records(path, format)?;
    Dataset::from_records(records).map_err(|e| DataError::Invalid(format!("{}: {e}", path.display())))
}

/// Canonical form: `user<TAB>item<TAB>rating<TAB>timestamp`, original ids,
/// rows in dataset order, after the provenance header.
pub fn canonical_tsv(d: &Dataset, meta: &Meta) -> String {
    let mut s = meta.comment_header();
    let (users, items) = (d.user_ids(), d.item_ids());
    for it in d.interactions() {
        writeln!(
            s,
            "{}\t{}\t{}\t{}",
            users[it.user as usize], items[it.item as usize], it.rating, it.timestamp
        )
        .unwrap();
    }
    s
}

/// Reads a canonical file back. Ids are reassigned in first-appearance
/// order of the file.
pub fn load_canonical(path: &Path) -> Result<Dataset, DataError> {
    let format = FormatDescriptor {
        rating_min: f64::NEG_INFINITY,
        rating_max: f64::INFINITY,
        ..FormatDescriptor::default()
    };
    load_interactions(path, &format)
}

/// One fold index per line, parallel to the rows of the training file.
pub fn folds_tsv(fa: &FoldAssignment, meta: &Meta) -> String {
    let mut s = meta.comment_header();
    writeln!(s, "# k {}", fa.k()).unwrap();
    for f in fa.folds() {
        writeln!(s, "{f}").unwrap();
    }
    s
}

pub fn load_folds(path: &Path) -> Result<FoldAssignment, DataError> {
    let text = read(path)?;
    let mut k = None;
    let mut folds = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("# k ") {
            k = rest.trim().parse::<usize>().ok();
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        folds.push(line.trim().parse::<u32>().map_err(|_| DataError::Parse {
            path: path.to_owned(),
            line: idx + 1,
            message: format!("bad fold index `{line}`"),
        })?);
    }
    let k = k.ok_or_else(|| DataError::Invalid(format!("{}: missing `# k` line", path.display())))?;
    FoldAssignment::new(k, folds).map_err(|e| DataError::Invalid(format!("{}: {e}", path.display())))
}

/// Size and sparsity of a dataset, counting only users and items that
/// occur in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    /// Share of empty user x item cells, in percent.
    pub sparsity_percent: f64,
}

impl DatasetStats {
    pub fn of(d: &Dataset) -> Self {
        let mut users = vec![false; d.n_users()];
        let mut items = vec![false; d.n_items()];
        for it in d.interactions() {
            users[it.user as usize] = true;
            items[it.item as usize] = true;
        }
        let users = users.iter().filter(|x| **x).count();
        let items = items.iter().filter(|x| **x).count();
        let cells = users as f64 * items as f64;
        let ratings = d.n_interactions();
        DatasetStats {
            users,
            items,
            ratings,
            sparsity_percent: if cells == 0.0 {
                100.0
            } else {
                100.0 * (1.0 - ratings as f64 / cells)
            },
        }
    }
}

pub fn stats_tsv(rows: &[(&str, DatasetStats)], meta: &Meta) -> String {
    let mut s = meta.comment_header();
    s.push_str("dataset\tusers\titems\tratings\tsparsity\n");
    for (name, st) in rows {
        writeln!(
            s,
            "{name}\t{}\t{}\t{}\t{:.2}%",
            st.users, st.items, st.ratings, st.sparsity_percent
        )
        .unwrap();
    }
    s
}
