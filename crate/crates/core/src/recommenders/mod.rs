//! User-kNN, Item-kNN and BPR-MF recommenders, and top-N ranking under the
//! All Unrated Items protocol.

mod bpr;
mod knn;

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

pub use bpr::{
    bpr_triple_gradient, bpr_triple_objective, train_bpr_mf, BprStep, MfModel, INIT_STD, ITEM_REG_SCALE, USER_REG_SCALE,
};
pub use knn::{train_item_knn, train_user_knn, KnnModel, Neighbor, Orientation};

use crate::dataset::{Dataset, RatingMatrix};
use crate::{Error, Result};

/// Which model family a grid is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Algorithm {
    UserKnn,
    ItemKnn,
    BprMf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::UserKnn, Algorithm::ItemKnn, Algorithm::BprMf];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::UserKnn => "user-knn",
            Algorithm::ItemKnn => "item-knn",
            Algorithm::BprMf => "bpr-mf",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

/// One point of a hyper-parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "variant", rename_all = "kebab-case"))]
pub enum HyperConfig {
    UserKnn {
        neighbors: u32,
    },
    ItemKnn {
        neighbors: u32,
    },
    BprMf {
        factors: u32,
        iterations: u32,
        learning_rate: f64,
    },
}

impl HyperConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            HyperConfig::UserKnn { .. } => Algorithm::UserKnn,
            HyperConfig::ItemKnn { .. } => Algorithm::ItemKnn,
            HyperConfig::BprMf { .. } => Algorithm::BprMf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            HyperConfig::UserKnn { neighbors } | HyperConfig::ItemKnn { neighbors } => neighbors >= 1,
            HyperConfig::BprMf {
                factors,
                iterations,
                learning_rate,
            } => factors >= 1 && iterations >= 1 && learning_rate > 0.0 && learning_rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(alloc::format!(
                "invalid hyper-parameters: {self:?}"
            )))
        }
    }
}

/// Anything that assigns a ranking score to (user, item).
pub trait Scorer {
    fn score(&self, user: usize, item: usize) -> f64;

    /// Writes the score of every item for `user` into `out` (length `n_items`).
    fn score_all(&self, user: usize, out: &mut [f64]) {
        for (item, s) in out.iter_mut().enumerate() {
            *s = self.score(user, item);
        }
    }

    fn n_users(&self) -> usize;
    fn n_items(&self) -> usize;
}

/// A trained model of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(KnnModel),
    Mf(MfModel),
}

impl Scorer for Model {
    fn score(&self, user: usize, item: usize) -> f64 {
        match self {
            Model::Knn(m) => m.score(user, item),
            Model::Mf(m) => m.score(user, item),
        }
    }

    fn score_all(&self, user: usize, out: &mut [f64]) {
        match self {
            Model::Knn(m) => m.score_all(user, out),
            Model::Mf(m) => m.score_all(user, out),
        }
    }

    fn n_users(&self) -> usize {
        match self {
            Model::Knn(m) => m.n_users(),
            Model::Mf(m) => m.n_users(),
        }
    }

    fn n_items(&self) -> usize {
        match self {
            Model::Knn(m) => m.n_items(),
            Model::Mf(m) => m.n_items(),
        }
    }
}

/// Trains the model described by `cfg`. The seed only matters for BPR-MF.
pub fn train(cfg: &HyperConfig, cv_train: &Dataset, seed: u64) -> Result<Model> {
    cfg.validate()?;
    Ok(match *cfg {
        HyperConfig::UserKnn { neighbors } => Model::Knn(train_user_knn(cv_train, neighbors as usize)?),
        HyperConfig::ItemKnn { neighbors } => Model::Knn(train_item_knn(cv_train, neighbors as usize)?),
        HyperConfig::BprMf { .. } => Model::Mf(train_bpr_mf(cv_train, cfg, seed)?),
    })
}

/// Top-N items for one user, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: u32,
    pub items: Vec<u32>,
    pub scores: Vec<f64>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Score descending, then item id ascending.
#[inline]
pub(crate) fn rank_order(a: &(u32, f64), b: &(u32, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Ranks every item absent from the user's training profile and keeps the
/// best `n`. Unknown users get an empty list.
pub fn recommend_top_n<S: Scorer + ?Sized>(
    model: &S,
    user: usize,
    cv_train: &RatingMatrix,
    n: usize,
) -> Result<RankedList> {
    if n == 0 {
        return Err(Error::InvalidArgument("cut-off N must be >= 1".into()));
    }
    let mut list = RankedList {
        user: user as u32,
        items: Vec::new(),
        scores: Vec::new(),
    };
    if user >= model.n_users() || user >= cv_train.n_users() {
        return Ok(list);
    }
    let n_items = model.n_items();
    let mut scores = vec![0.0; n_items];
    model.score_all(user, &mut scores);
    let mut rated = vec![false; n_items];
    for &(item, _) in cv_train.user_row(user) {
        if (item as usize) < n_items {
            rated[item as usize] = true;
        }
    }
    let mut candidates: Vec<(u32, f64)> = scores
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !rated[*i])
        .map(|(i, s)| (i as u32, s))
        .collect();
    if candidates.len() > n {
        candidates.select_nth_unstable_by(n - 1, rank_order);
        candidates.truncate(n);
    }
    candidates.sort_unstable_by(rank_order);
    for (item, score) in candidates {
        list.items.push(item);
        list.scores.push(score);
    }
    Ok(list)
}
