use alloc::vec;
use alloc::vec::Vec;

use super::Scorer;
use crate::dataset::{Dataset, RatingMatrix};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Orientation {
    User,
    Item,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub similarity: f64,
}

/// Truncated cosine neighborhoods over raw ratings.
///
/// Each list holds at most `k` entries sorted by similarity descending and
/// neighbor id ascending, and never contains the entity itself. Entities
/// whose profile is empty get an empty list.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    orientation: Orientation,
    k: usize,
    neighbors: Vec<Vec<Neighbor>>,
    ratings: RatingMatrix,
    // item orientation only: for item j, the (i, sim(i, j)) with j in N(i),
    // sorted by i. Zero similarities are left out.
    reverse: Vec<Vec<(u32, f64)>>,
}

impl KnnModel {
    /// Reassembles a model from stored neighbor lists.
    pub fn from_parts(
        orientation: Orientation,
        k: usize,
        neighbors: Vec<Vec<Neighbor>>,
        ratings: RatingMatrix,
    ) -> Result<Self> {
        let expected = match orientation {
            Orientation::User => ratings.n_users(),
            Orientation::Item => ratings.n_items(),
        };
        if neighbors.len() != expected {
            return Err(Error::InvalidArgument(alloc::format!(
                "expected {expected} neighbor lists, got {}",
                neighbors.len()
            )));
        }
        for (e, list) in neighbors.iter().enumerate() {
            if list.len() > k || list.iter().any(|n| n.id as usize >= expected || n.id as usize == e) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "malformed neighbor list for entity {e}"
                )));
            }
        }
        let reverse = match orientation {
            Orientation::User => Vec::new(),
            Orientation::Item => {
                let mut rev = vec![Vec::new(); expected];
                for (i, list) in neighbors.iter().enumerate() {
                    for n in list.iter().filter(|n| n.similarity != 0.0) {
                        rev[n.id as usize].push((i as u32, n.similarity));
                    }
                }
                rev
            }
        };
        Ok(KnnModel {
            orientation,
            k,
            neighbors,
            ratings,
            reverse,
        })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, entity: usize) -> &[Neighbor] {
        self.neighbors.get(entity).map_or(&[], |v| v.as_slice())
    }

    pub fn all_neighbors(&self) -> &[Vec<Neighbor>] {
        &self.neighbors
    }

    pub fn ratings(&self) -> &RatingMatrix {
        &self.ratings
    }

    pub fn similarity(&self, a: usize, b: usize) -> Option<f64> {
        self.neighbors(a)
            .iter()
            .find(|n| n.id as usize == b)
            .map(|n| n.similarity)
    }
}

/// Cosine neighborhoods between users (rows of the rating matrix).
pub fn train_user_knn(cv_train: &Dataset, k: usize) -> Result<KnnModel> {
    train(cv_train.rating_matrix(), Orientation::User, k)
}

/// Cosine neighborhoods between items (columns of the rating matrix).
pub fn train_item_knn(cv_train: &Dataset, k: usize) -> Result<KnnModel> {
    train(cv_train.rating_matrix(), Orientation::Item, k)
}

fn train(ratings: RatingMatrix, orientation: Orientation, k: usize) -> Result<KnnModel> {
    if k == 0 {
        return Err(Error::InvalidArgument("neighbors k must be >= 1".into()));
    }
    match orientation {
        Orientation::User => {
            let n = ratings.n_users();
            let neighbors = neighborhoods(n, k, |e| ratings.user_row(e), |c| ratings.item_column(c));
            KnnModel::from_parts(orientation, k, neighbors, ratings)
        }
        Orientation::Item => {
            let n = ratings.n_items();
            let neighbors = neighborhoods(n, k, |e| ratings.item_column(e), |c| ratings.user_row(c));
            KnnModel::from_parts(orientation, k, neighbors, ratings)
        }
    }
}

/// Top-k cosine lists for `n` entities. `profile(e)` lists e's (coordinate,
/// rating) pairs and `inverted(c)` lists the entities rating coordinate c.
fn neighborhoods<'a>(
    n: usize,
    k: usize,
    profile: impl Fn(usize) -> &'a [(u32, f64)],
    inverted: impl Fn(usize) -> &'a [(u32, f64)],
) -> Vec<Vec<Neighbor>> {
    let norms: Vec<f64> = (0..n)
        .map(|e| math::sqrt(profile(e).iter().map(|(_, r)| r * r).sum::<f64>()))
        .collect();

    let mut dots = vec![0.0f64; n];
    let mut neighbors = Vec::with_capacity(n);
    for e in 0..n {
        if norms[e] == 0.0 {
            neighbors.push(Vec::new());
            continue;
        }
        dots.iter_mut().for_each(|d| *d = 0.0);
        // co-rated terms accumulate in ascending shared-coordinate order
        for &(c, r_e) in profile(e) {
            for &(other, r_o) in inverted(c as usize) {
                dots[other as usize] += r_e * r_o;
            }
        }
        let mut cands: Vec<(u32, f64)> = (0..n)
            .filter(|&o| o != e)
            .map(|o| (o as u32, cosine(dots[o], norms[e], norms[o])))
            .collect();
        if cands.len() > k {
            cands.select_nth_unstable_by(k - 1, super::rank_order);
            cands.truncate(k);
        }
        cands.sort_unstable_by(super::rank_order);
        neighbors.push(
            cands
                .into_iter()
                .map(|(id, similarity)| Neighbor { id, similarity })
                .collect(),
        );
    }
    neighbors
}

#[inline]
fn cosine(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

impl Scorer for KnnModel {
    /// User orientation: sum over neighbors v of `user` (list order) of
    /// sim(user, v) * r(v, item). Item orientation: sum over items j rated
    /// by `user` (ascending j) with j in N(item) of sim(item, j) * r(user, j).
    fn score(&self, user: usize, item: usize) -> f64 {
        match self.orientation {
            Orientation::User => self
                .neighbors(user)
                .iter()
                .filter_map(|n| {
                    self.ratings
                        .rating(n.id as usize, item as u32)
                        .map(|r| n.similarity * r)
                })
                .sum(),
            Orientation::Item => {
                let mut s = 0.0;
                for &(j, r) in self.ratings.user_row(user) {
                    let rev = &self.reverse[j as usize];
                    if let Ok(p) = rev.binary_search_by_key(&(item as u32), |e| e.0) {
                        s += rev[p].1 * r;
                    }
                }
                s
            }
        }
    }

    fn score_all(&self, user: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|s| *s = 0.0);
        match self.orientation {
            Orientation::User => {
                for n in self.neighbors(user) {
                    for &(item, r) in self.ratings.user_row(n.id as usize) {
                        out[item as usize] += n.similarity * r;
                    }
                }
            }
            Orientation::Item => {
                for &(j, r) in self.ratings.user_row(user) {
                    for &(item, sim) in &self.reverse[j as usize] {
                        out[item as usize] += sim * r;
                    }
                }
            }
        }
    }

    fn n_users(&self) -> usize {
        self.ratings.n_users()
    }

    fn n_items(&self) -> usize {
        self.ratings.n_items()
    }
}
