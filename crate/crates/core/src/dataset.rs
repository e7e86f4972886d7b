//! Rating logs, core filtering, stratified sampling, the per-user temporal
//! hold-out and per-user k-fold assignment.
//!
//! A [`Dataset`] keeps interactions in input order; every derived dataset
//! preserves the relative order of the rows it keeps. Internal ids are
//! assigned in first-appearance order. Splits ([`temporal_holdout`],
//! [`fold_view`]) share the id space of their source so item popularity
//! and user profiles stay comparable across the pieces.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::math;
use crate::rng;
use crate::{Error, Result};

/// Rounds `fraction * count` up, ignoring floating noise below 1e-9.
pub(crate) fn ceil_fraction(fraction: f64, count: usize) -> usize {
    let raw = fraction * count as f64;
    let c = math::ceil(raw - 1e-9);
    if c < 0.0 {
        0
    } else {
        (c as usize).min(count)
    }
}

/// One rating event with dense internal ids.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
    pub timestamp: i64,
}

/// A record as read from a log, before id assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    interactions: Vec<Interaction>,
    user_ids: Arc<Vec<String>>,
    item_ids: Arc<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from raw records.
    ///
    /// Duplicate (user, item) pairs keep the record with the latest
    /// timestamp (the later record in input order on equal timestamps),
    /// placed at that record's input position. Ids are assigned in order
    /// of first appearance among the retained records.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = RawRecord>,
    {
        let records: Vec<RawRecord> = records.into_iter().collect();
        if records.is_empty() {
            return Err(Error::EmptyDataset(""));
        }
        // (user, item) -> index of the retained record
        let mut keep: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for (idx, r) in records.iter().enumerate() {
            keep.entry((r.user.as_str(), r.item.as_str()))
                .and_modify(|cur| {
                    if r.timestamp >= records[*cur].timestamp {
                        *cur = idx;
                    }
                })
                .or_insert(idx);
        }
        let mut retained = vec![false; records.len()];
        for &idx in keep.values() {
            retained[idx] = true;
        }
        drop(keep);

        let mut users: BTreeMap<&str, u32> = BTreeMap::new();
        let mut items: BTreeMap<&str, u32> = BTreeMap::new();
        let mut user_ids = Vec::new();
        let mut item_ids = Vec::new();
        let mut interactions = Vec::with_capacity(records.len());
        for (r, _) in records.iter().zip(&retained).filter(|(_, k)| **k) {
            let user = *users.entry(r.user.as_str()).or_insert_with(|| {
                user_ids.push(r.user.clone());
                (user_ids.len() - 1) as u32
            });
            let item = *items.entry(r.item.as_str()).or_insert_with(|| {
                item_ids.push(r.item.clone());
                (item_ids.len() - 1) as u32
            });
            interactions.push(Interaction {
                user,
                item,
                rating: r.rating,
                timestamp: r.timestamp,
            });
        }
        Ok(Dataset {
            interactions,
            user_ids: Arc::new(user_ids),
            item_ids: Arc::new(item_ids),
        })
    }

    /// Rows over an existing id space, kept in the given order.
    fn with_id_space(&self, interactions: Vec<Interaction>) -> Self {
        Dataset {
            interactions,
            user_ids: Arc::clone(&self.user_ids),
            item_ids: Arc::clone(&self.item_ids),
        }
    }

    /// Reassigns ids in first-appearance order, dropping unused ids.
    fn densified(&self, rows: Vec<Interaction>) -> Self {
        let mut user_map = vec![u32::MAX; self.n_users()];
        let mut item_map = vec![u32::MAX; self.n_items()];
        let mut user_ids = Vec::new();
        let mut item_ids = Vec::new();
        let interactions = rows
            .into_iter()
            .map(|mut it| {
                let u = &mut user_map[it.user as usize];
                if *u == u32::MAX {
                    *u = user_ids.len() as u32;
                    user_ids.push(self.user_ids[it.user as usize].clone());
                }
                let i = &mut item_map[it.item as usize];
                if *i == u32::MAX {
                    *i = item_ids.len() as u32;
                    item_ids.push(self.item_ids[it.item as usize].clone());
                }
                it.user = *u;
                it.item = *i;
                it
            })
            .collect();
        Dataset {
            interactions,
            user_ids: Arc::new(user_ids),
            item_ids: Arc::new(item_ids),
        }
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_interactions(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    /// Fraction of the user x item matrix without a rating.
    pub fn sparsity(&self) -> f64 {
        let cells = self.n_users() as f64 * self.n_items() as f64;
        if cells == 0.0 {
            return 1.0;
        }
        1.0 - self.n_interactions() as f64 / cells
    }

    /// True when every id in `[0, n_users)` and `[0, n_items)` is used.
    pub fn is_dense(&self) -> bool {
        let mut u = vec![false; self.n_users()];
        let mut i = vec![false; self.n_items()];
        for it in &self.interactions {
            u[it.user as usize] = true;
            i[it.item as usize] = true;
        }
        u.iter().all(|x| *x) && i.iter().all(|x| *x)
    }

    /// Row indices of each user's interactions, in input order.
    pub fn rows_by_user(&self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); self.n_users()];
        for (idx, it) in self.interactions.iter().enumerate() {
            rows[it.user as usize].push(idx);
        }
        rows
    }

    /// Sparse user/item rating tables for training and scoring.
    pub fn rating_matrix(&self) -> RatingMatrix {
        RatingMatrix::from_dataset(self)
    }
}

/// Compressed per-user and per-item rating lists, both sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    n_users: usize,
    n_items: usize,
    user_ptr: Vec<usize>,
    user_entries: Vec<(u32, f64)>,
    item_ptr: Vec<usize>,
    item_entries: Vec<(u32, f64)>,
}

impl RatingMatrix {
    pub fn from_dataset(d: &Dataset) -> Self {
        let (user_ptr, user_entries) = compress(
            d.n_users(),
            d.interactions.iter().map(|it| (it.user, it.item, it.rating)),
        );
        let (item_ptr, item_entries) = compress(
            d.n_items(),
            d.interactions.iter().map(|it| (it.item, it.user, it.rating)),
        );
        RatingMatrix {
            n_users: d.n_users(),
            n_items: d.n_items(),
            user_ptr,
            user_entries,
            item_ptr,
            item_entries,
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_ratings(&self) -> usize {
        self.user_entries.len()
    }

    /// `(item, rating)` pairs rated by `user`, ascending by item.
    pub fn user_row(&self, user: usize) -> &[(u32, f64)] {
        if user >= self.n_users {
            return &[];
        }
        &self.user_entries[self.user_ptr[user]..self.user_ptr[user + 1]]
    }

    /// `(user, rating)` pairs for `item`, ascending by user.
    pub fn item_column(&self, item: usize) -> &[(u32, f64)] {
        if item >= self.n_items {
            return &[];
        }
        &self.item_entries[self.item_ptr[item]..self.item_ptr[item + 1]]
    }

    pub fn rating(&self, user: usize, item: u32) -> Option<f64> {
        let row = self.user_row(user);
        row.binary_search_by_key(&item, |e| e.0).ok().map(|p| row[p].1)
    }
}

fn compress<I>(n_rows: usize, triples: I) -> (Vec<usize>, Vec<(u32, f64)>)
where
    I: Iterator<Item = (u32, u32, f64)> + Clone,
{
    let mut ptr = vec![0usize; n_rows + 1];
    for (r, _, _) in triples.clone() {
        ptr[r as usize + 1] += 1;
    }
    for k in 0..n_rows {
        ptr[k + 1] += ptr[k];
    }
    let mut fill = ptr.clone();
    let mut entries = vec![(0u32, 0.0f64); ptr[n_rows]];
    for (r, c, v) in triples {
        let slot = &mut fill[r as usize];
        entries[*slot] = (c, v);
        *slot += 1;
    }
    for k in 0..n_rows {
        entries[ptr[k]..ptr[k + 1]].sort_by_key(|e| e.0);
    }
    (ptr, entries)
}

/// Single-pass core filter: drop users with fewer than `min_user`
/// interactions, then items with fewer than `min_item` interactions among
/// the remaining rows. Ids are re-densified.
pub fn filter_core(d: &Dataset, min_user: usize, min_item: usize) -> Result<Dataset> {
    let mut user_deg = vec![0usize; d.n_users()];
    for it in &d.interactions {
        user_deg[it.user as usize] += 1;
    }
    let after_users: Vec<Interaction> = d
        .interactions
        .iter()
        .copied()
        .filter(|it| user_deg[it.user as usize] >= min_user)
        .collect();
    let mut item_deg = vec![0usize; d.n_items()];
    for it in &after_users {
        item_deg[it.item as usize] += 1;
    }
    let kept: Vec<Interaction> = after_users
        .into_iter()
        .filter(|it| item_deg[it.item as usize] >= min_item)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyDataset(" after core filtering"));
    }
    Ok(d.densified(kept))
}

/// Samples `ceil(fraction * count)` interactions uniformly without
/// replacement inside each rating-value stratum. Strata are visited in
/// ascending rating order with one seeded generator; kept rows retain their
/// relative order.
pub fn sample_stratified(d: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "sampling fraction must be in (0, 1], got {fraction}"
        )));
    }
    let mut strata: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut order: Vec<usize> = (0..d.interactions.len()).collect();
    order.sort_by(|&a, &b| {
        d.interactions[a]
            .rating
            .total_cmp(&d.interactions[b].rating)
            .then(a.cmp(&b))
    });
    for idx in order {
        let r = d.interactions[idx].rating;
        match strata.last_mut() {
            Some((v, rows)) if v.total_cmp(&r).is_eq() => rows.push(idx),
            _ => strata.push((r, vec![idx])),
        }
    }
    let mut rng = rng::seeded(seed);
    let mut selected = vec![false; d.interactions.len()];
    for (_, rows) in &strata {
        let take = ceil_fraction(fraction, rows.len());
        for pick in rand::seq::index::sample(&mut rng, rows.len(), take) {
            selected[rows[pick]] = true;
        }
    }
    let kept: Vec<Interaction> = d
        .interactions
        .iter()
        .zip(&selected)
        .filter(|(_, s)| **s)
        .map(|(it, _)| *it)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyDataset(" after sampling"));
    }
    Ok(d.densified(kept))
}

/// Per-user chronological split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub ratio: f64,
}

/// Per user, rows are ordered by (timestamp, input position); the first
/// `ceil(ratio * n_u)` go to train and the rest to test.
pub fn temporal_holdout(d: &Dataset, ratio: f64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    let mut is_test = vec![false; d.interactions.len()];
    for mut rows in d.rows_by_user() {
        // stable: equal timestamps keep input order
        rows.sort_by_key(|&r| d.interactions[r].timestamp);
        let n_train = ceil_fraction(ratio, rows.len());
        for &r in &rows[n_train..] {
            is_test[r] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (it, t) in d.interactions.iter().zip(&is_test) {
        if *t {
            test.push(*it);
        } else {
            train.push(*it);
        }
    }
    Ok(SplitPair {
        train: d.with_id_space(train),
        test: d.with_id_space(test),
        ratio,
    })
}

/// Fold index for every training row, parallel to the dataset's rows.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldAssignment {
    k: usize,
    folds: Vec<u32>,
}

impl FoldAssignment {
    /// Wraps an existing assignment, checking every index is below `k`.
    pub fn new(k: usize, folds: Vec<u32>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(alloc::format!("k must be >= 2, got {k}")));
        }
        if let Some(bad) = folds.iter().find(|f| **f as usize >= k) {
            return Err(Error::InvalidArgument(alloc::format!(
                "fold index {bad} out of range for k = {k}"
            )));
        }
        Ok(FoldAssignment { k, folds })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn folds(&self) -> &[u32] {
        &self.folds
    }

    pub fn fold_of(&self, row: usize) -> usize {
        self.folds[row] as usize
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }
}

/// Per user (ascending user id), shuffle that user's rows with one seeded
/// generator and deal them round-robin to folds `0..k`.
pub fn kfold_assign(train: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(alloc::format!("k must be >= 2, got {k}")));
    }
    let mut rng = rng::seeded(seed);
    let mut folds = vec![0u32; train.n_interactions()];
    for mut rows in train.rows_by_user() {
        rows.shuffle(&mut rng);
        for (pos, r) in rows.into_iter().enumerate() {
            folds[r] = (pos % k) as u32;
        }
    }
    Ok(FoldAssignment { k, folds })
}

/// Splits `train` into (cv_train, cv_valid) for one held-out fold. Both
/// inherit the id space of `train`.
pub fn fold_view(train: &Dataset, fa: &FoldAssignment, held_out: usize) -> Result<(Dataset, Dataset)> {
    if held_out >= fa.k {
        return Err(Error::InvalidArgument(alloc::format!(
            "held-out fold {held_out} out of range for k = {}",
            fa.k
        )));
    }
    if fa.len() != train.n_interactions() {
        return Err(Error::InvalidArgument(alloc::format!(
            "fold assignment covers {} rows, dataset has {}",
            fa.len(),
            train.n_interactions()
        )));
    }
    let (mut cv_train, mut cv_valid) = (Vec::new(), Vec::new());
    for (it, f) in train.interactions.iter().zip(&fa.folds) {
        if *f as usize == held_out {
            cv_valid.push(*it);
        } else {
            cv_train.push(*it);
        }
    }
    Ok((train.with_id_space(cv_train), train.with_id_space(cv_valid)))
}
