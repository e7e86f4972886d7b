//! Per-user accuracy (nDCG, precision, recall, MRR) and novelty (EFD, EPC)
//! at a cut-off N.
//!
//! Relevance is binary. Novelty is computed against the popularity of the
//! cv_train split of the same fold and ignores relevance.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::math;
use crate::recommenders::RankedList;
use crate::{Error, Result};

/// Cut-off used for model selection unless configured otherwise.
pub const DEFAULT_CUTOFF: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Metric {
    Ndcg,
    Precision,
    Recall,
    Mrr,
    Efd,
    Epc,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Ndcg,
        Metric::Precision,
        Metric::Recall,
        Metric::Mrr,
        Metric::Efd,
        Metric::Epc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ndcg => "ndcg",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Mrr => "mrr",
            Metric::Efd => "efd",
            Metric::Epc => "epc",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn is_novelty(self) -> bool {
        matches!(self, Metric::Efd | Metric::Epc)
    }
}

/// How a rating is compared against the relevance threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Threshold {
    /// rating >= tau
    #[default]
    Inclusive,
    /// rating > tau
    Strict,
}

/// Rank weighting of novelty terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NoveltyDiscount {
    /// Plain mean over the top-N.
    #[default]
    None,
    /// Weighted mean with weight 1/log2(k + 1) at rank k.
    Log2,
}

/// Relevant validation items per user, each list sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceJudgments {
    relevant: Vec<Vec<u32>>,
}

impl RelevanceJudgments {
    pub fn relevant(&self, user: usize) -> &[u32] {
        self.relevant.get(user).map_or(&[], |v| v.as_slice())
    }

    pub fn n_users(&self) -> usize {
        self.relevant.len()
    }

    /// Users with at least one relevant item, ascending.
    pub fn judged_users(&self) -> impl Iterator<Item = usize> + '_ {
        self.relevant
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_empty())
            .map(|(u, _)| u)
    }
}

/// Items a user rated at or above `tau` in the validation split.
pub fn judge(cv_valid: &Dataset, tau: f64, threshold: Threshold) -> RelevanceJudgments {
    let mut relevant = vec![Vec::new(); cv_valid.n_users()];
    for it in cv_valid.interactions() {
        let hit = match threshold {
            Threshold::Inclusive => it.rating >= tau,
            Threshold::Strict => it.rating > tau,
        };
        if hit {
            relevant[it.user as usize].push(it.item);
        }
    }
    for r in &mut relevant {
        r.sort_unstable();
        r.dedup();
    }
    RelevanceJudgments { relevant }
}

/// Item interaction counts in a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityModel {
    counts: Vec<u64>,
    seen_by: Vec<u64>,
    total: u64,
    n_users: u64,
}

impl PopularityModel {
    pub fn from_dataset(cv_train: &Dataset) -> Self {
        let mut counts = vec![0u64; cv_train.n_items()];
        let mut active = vec![false; cv_train.n_users()];
        for it in cv_train.interactions() {
            counts[it.item as usize] += 1;
            active[it.user as usize] = true;
        }
        // (user, item) pairs are unique after ingestion
        let seen_by = counts.clone();
        PopularityModel {
            total: counts.iter().sum(),
            counts,
            seen_by,
            n_users: active.iter().filter(|a| **a).count() as u64,
        }
    }

    /// Builds a table directly: `counts[i]` interactions and `seen_by[i]`
    /// distinct users per item.
    pub fn from_counts(counts: Vec<u64>, seen_by: Vec<u64>, n_users: u64) -> Self {
        PopularityModel {
            total: counts.iter().sum(),
            counts,
            seen_by,
            n_users,
        }
    }

    pub fn count(&self, item: u32) -> u64 {
        self.counts.get(item as usize).copied().unwrap_or(0)
    }

    pub fn seen_by(&self, item: u32) -> u64 {
        self.seen_by.get(item as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n_users(&self) -> u64 {
        self.n_users
    }

    /// Share of interactions that hit `item`; unseen items get 1/(total+1).
    pub fn probability(&self, item: u32) -> f64 {
        match self.count(item) {
            0 => 1.0 / (self.total as f64 + 1.0),
            c => c as f64 / self.total as f64,
        }
    }
}

#[inline]
fn is_relevant(rel: &[u32], item: u32) -> bool {
    rel.binary_search(&item).is_ok()
}

fn hits(list: &[u32], rel: &[u32], n: usize) -> usize {
    list.iter().take(n).filter(|i| is_relevant(rel, **i)).count()
}

/// Hits in the top `n`, divided by `n` even when the list is shorter.
pub fn precision_at(list: &[u32], rel: &[u32], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    hits(list, rel, n) as f64 / n as f64
}

/// Hits in the top `n` over the number of relevant items. Empty `rel` gives 0.
pub fn recall_at(list: &[u32], rel: &[u32], n: usize) -> f64 {
    if rel.is_empty() {
        return 0.0;
    }
    hits(list, rel, n) as f64 / rel.len() as f64
}

/// Binary-gain nDCG with a log2(k + 1) discount.
pub fn ndcg_at(list: &[u32], rel: &[u32], n: usize) -> f64 {
    let dcg: f64 = list
        .iter()
        .take(n)
        .enumerate()
        .filter(|(_, i)| is_relevant(rel, **i))
        .map(|(k, _)| 1.0 / math::log2(k as f64 + 2.0))
        .sum();
    let idcg: f64 = (0..n.min(rel.len())).map(|k| 1.0 / math::log2(k as f64 + 2.0)).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Reciprocal rank of the first relevant item in the top `n`, else 0.
pub fn mrr_at(list: &[u32], rel: &[u32], n: usize) -> f64 {
    list.iter()
        .take(n)
        .position(|i| is_relevant(rel, *i))
        .map_or(0.0, |k| 1.0 / (k as f64 + 1.0))
}

fn novelty_mean(list: &[u32], n: usize, discount: NoveltyDiscount, novelty: impl Fn(u32) -> f64) -> f64 {
    let top = &list[..list.len().min(n)];
    if top.is_empty() {
        return 0.0;
    }
    match discount {
        NoveltyDiscount::None => top.iter().map(|i| novelty(*i)).sum::<f64>() / top.len() as f64,
        NoveltyDiscount::Log2 => {
            let (mut num, mut den) = (0.0, 0.0);
            for (k, i) in top.iter().enumerate() {
                let w = 1.0 / math::log2(k as f64 + 2.0);
                num += w * novelty(*i);
                den += w;
            }
            num / den
        }
    }
}

/// Expected Free Discovery: mean self-information -log2 p(i) of the top `n`.
pub fn efd_at(list: &[u32], pop: &PopularityModel, n: usize, discount: NoveltyDiscount) -> f64 {
    novelty_mean(list, n, discount, |i| -math::log2(pop.probability(i)))
}

/// Expected Popularity Complement: mean of 1 - seen(i)/n_users over the top `n`.
pub fn epc_at(list: &[u32], pop: &PopularityModel, n: usize, discount: NoveltyDiscount) -> f64 {
    novelty_mean(list, n, discount, |i| {
        if pop.n_users() == 0 {
            1.0
        } else {
            1.0 - pop.seen_by(i) as f64 / pop.n_users() as f64
        }
    })
}

/// Evaluation knobs shared by every user of a fold.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalOptions {
    pub cutoff: usize,
    pub tau: f64,
    pub threshold: Threshold,
    pub novelty_discount: NoveltyDiscount,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            cutoff: DEFAULT_CUTOFF,
            tau: 4.0,
            threshold: Threshold::Inclusive,
            novelty_discount: NoveltyDiscount::None,
        }
    }
}

pub fn metric_value(
    metric: Metric,
    list: &[u32],
    rel: &[u32],
    pop: &PopularityModel,
    n: usize,
    discount: NoveltyDiscount,
) -> f64 {
    let v = match metric {
        Metric::Ndcg => ndcg_at(list, rel, n),
        Metric::Precision => precision_at(list, rel, n),
        Metric::Recall => recall_at(list, rel, n),
        Metric::Mrr => mrr_at(list, rel, n),
        Metric::Efd => efd_at(list, pop, n, discount),
        Metric::Epc => epc_at(list, pop, n, discount),
    };
    debug_assert!(
        v >= 0.0 && (metric == Metric::Efd || v <= 1.0 + 1e-12),
        "{} out of range: {v}",
        metric.name()
    );
    v
}

/// Per-user values of one metric for one (config, fold) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PerUserMetricMatrix {
    pub metric: Metric,
    pub cutoff: usize,
    pub config: usize,
    pub fold: usize,
    pub users: Vec<u32>,
    pub values: Vec<f64>,
}

impl PerUserMetricMatrix {
    pub fn mean(&self) -> f64 {
        math::mean(&self.values)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// Scores every user that has a relevant validation item and a non-empty
/// ranked list, for all six metrics. User order is ascending and shared by
/// every returned matrix.
pub fn evaluate_system(
    lists: &[RankedList],
    rel: &RelevanceJudgments,
    pop: &PopularityModel,
    opts: &EvalOptions,
    config: usize,
    fold: usize,
) -> Result<Vec<PerUserMetricMatrix>> {
    let mut evaluable: Vec<&RankedList> = lists
        .iter()
        .filter(|l| !l.is_empty() && !rel.relevant(l.user as usize).is_empty())
        .collect();
    evaluable.sort_by_key(|l| l.user);
    evaluable.dedup_by_key(|l| l.user);
    if evaluable.is_empty() {
        return Err(Error::NoEvaluableUsers { fold });
    }
    let users: Vec<u32> = evaluable.iter().map(|l| l.user).collect();
    Ok(Metric::ALL
        .iter()
        .map(|&metric| PerUserMetricMatrix {
            metric,
            cutoff: opts.cutoff,
            config,
            fold,
            users: users.clone(),
            values: evaluable
                .iter()
                .map(|l| {
                    metric_value(
                        metric,
                        &l.items,
                        rel.relevant(l.user as usize),
                        pop,
                        opts.cutoff,
                        opts.novelty_discount,
                    )
                })
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RawRecord;
    use alloc::format;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn judge_threshold_modes() {
        let recs = [5.0, 4.0, 3.0, 5.0].iter().enumerate().map(|(k, r)| RawRecord {
            user: format!("u{}", k % 2),
            item: format!("i{k}"),
            rating: *r,
            timestamp: 0,
        });
        let d = Dataset::from_records(recs).unwrap();
        let inc = judge(&d, 4.0, Threshold::Inclusive);
        assert_eq!(inc.relevant(0), &[0]);
        assert_eq!(inc.relevant(1), &[1, 3]);
        let strict = judge(&d, 4.0, Threshold::Strict);
        assert_eq!(strict.relevant(1), &[3]);
        let none = judge(&d, 6.0, Threshold::Inclusive);
        assert_eq!(none.judged_users().count(), 0);
    }

    #[test]
    fn judge_equals_filter_oracle() {
        let recs: Vec<RawRecord> = (0..60)
            .map(|k| RawRecord {
                user: format!("u{}", k % 7),
                item: format!("i{}", (k * 13) % 40),
                rating: (1 + (k * 7) % 5) as f64,
                timestamp: k,
            })
            .collect();
        let d = Dataset::from_records(recs).unwrap();
        let j = judge(&d, 4.0, Threshold::Inclusive);
        for u in 0..d.n_users() as u32 {
            let mut want: Vec<u32> = d
                .interactions()
                .iter()
                .filter(|it| it.user == u && it.rating >= 4.0)
                .map(|it| it.item)
                .collect();
            want.sort();
            assert_eq!(j.relevant(u as usize), want.as_slice());
        }
    }

    #[test]
    fn precision_cases() {
        let list: Vec<u32> = (0..10).collect();
        assert_eq!(precision_at(&list, &list, 10), 1.0);
        assert_eq!(precision_at(&list, &[20, 21], 10), 0.0);
        assert_close(precision_at(&list, &[1, 3, 5, 7, 30], 10), 0.4);
        // denominator stays N for short lists
        assert_close(precision_at(&[1, 2], &[1, 2], 10), 0.2);
    }

    #[test]
    fn recall_cases() {
        let list: Vec<u32> = (0..10).collect();
        assert_eq!(recall_at(&list, &[2, 4, 9], 10), 1.0);
        assert_eq!(recall_at(&list, &[2, 40, 41, 42], 10), 0.25);
    }

    #[test]
    fn ndcg_cases() {
        assert_close(ndcg_at(&[1, 2, 3], &[1, 2], 10), 1.0);
        assert_eq!(ndcg_at(&[1, 2, 3], &[7], 10), 0.0);
        // hits at ranks 1 and 3
        let got = ndcg_at(&[5, 6, 7], &[5, 7], 3);
        let want = 1.5 / (1.0 + 1.0 / libm::log2(3.0));
        assert_close(got, want);
        assert!((got - 0.91972).abs() < 1e-5);
    }

    #[test]
    fn mrr_cases() {
        assert_eq!(mrr_at(&[4, 5, 6], &[4], 10), 1.0);
        assert_close(mrr_at(&[4, 5, 6], &[6], 10), 1.0 / 3.0);
        let list: Vec<u32> = (0..11).collect();
        assert_eq!(mrr_at(&list, &[10], 10), 0.0);
    }

    #[test]
    fn novelty_cases() {
        let all = PopularityModel::from_counts(vec![10, 0], vec![5, 0], 5);
        assert_eq!(efd_at(&[0], &all, 10, NoveltyDiscount::None), 0.0);
        assert_eq!(epc_at(&[0], &all, 10, NoveltyDiscount::None), 0.0);
        assert_eq!(epc_at(&[1], &all, 10, NoveltyDiscount::None), 1.0);
        // unseen item: p = 1/(total+1) = 1/11
        assert_close(efd_at(&[1], &all, 10, NoveltyDiscount::None), libm::log2(11.0));

        let eighths = PopularityModel::from_counts(vec![1; 8], vec![1; 8], 8);
        assert_eq!(efd_at(&[0, 3, 5], &eighths, 10, NoveltyDiscount::None), 3.0);
        assert_eq!(efd_at(&[], &eighths, 10, NoveltyDiscount::None), 0.0);
        assert_eq!(epc_at(&[], &eighths, 10, NoveltyDiscount::None), 0.0);
    }

    #[test]
    fn novelty_equals_direct_summation() {
        let counts = vec![7u64, 1, 0, 3, 12, 5];
        let seen = vec![4u64, 1, 0, 3, 6, 2];
        let pop = PopularityModel::from_counts(counts.clone(), seen.clone(), 9);
        let total: u64 = counts.iter().sum();
        let list = [4u32, 2, 0, 5, 1, 3];
        for n in 1..=8 {
            let top = &list[..n.min(list.len())];
            let efd: f64 = top
                .iter()
                .map(|&i| {
                    let c = counts[i as usize];
                    let p = if c == 0 {
                        1.0 / (total + 1) as f64
                    } else {
                        c as f64 / total as f64
                    };
                    -libm::log2(p)
                })
                .sum::<f64>()
                / top.len() as f64;
            let epc: f64 = top.iter().map(|&i| 1.0 - seen[i as usize] as f64 / 9.0).sum::<f64>() / top.len() as f64;
            assert_close(efd_at(&list, &pop, n, NoveltyDiscount::None), efd);
            assert_close(epc_at(&list, &pop, n, NoveltyDiscount::None), epc);
        }
        // discounted variant: weighted mean with 1/log2(k+1)
        let w: Vec<f64> = (1..=3).map(|k| 1.0 / libm::log2(k as f64 + 1.0)).collect();
        let vals: Vec<f64> = list[..3].iter().map(|&i| 1.0 - seen[i as usize] as f64 / 9.0).collect();
        let want = (0..3).map(|k| w[k] * vals[k]).sum::<f64>() / w.iter().sum::<f64>();
        assert_close(epc_at(&list, &pop, 3, NoveltyDiscount::Log2), want);
    }

    #[test]
    fn popularity_from_training_split() {
        let recs = [("a", "x"), ("b", "x"), ("b", "y")].iter().map(|(u, i)| RawRecord {
            user: (*u).into(),
            item: (*i).into(),
            rating: 3.0,
            timestamp: 0,
        });
        let pop = PopularityModel::from_dataset(&Dataset::from_records(recs).unwrap());
        assert_eq!((pop.count(0), pop.count(1), pop.total(), pop.n_users()), (2, 1, 3, 2));
        assert_close(pop.probability(0), 2.0 / 3.0);
    }

    fn list(user: u32, items: &[u32]) -> RankedList {
        RankedList {
            user,
            items: items.to_vec(),
            scores: (0..items.len()).rev().map(|s| s as f64).collect(),
        }
    }

    #[test]
    fn evaluate_system_population_and_means() {
        let rel = RelevanceJudgments {
            relevant: vec![vec![1, 2], Vec::new(), vec![0], vec![5]],
        };
        let pop = PopularityModel::from_counts(vec![1; 6], vec![1; 6], 4);
        let opts = EvalOptions {
            cutoff: 3,
            ..EvalOptions::default()
        };
        let lists = [
            list(2, &[3, 0, 4]),
            list(0, &[1, 3, 2]),
            list(1, &[0, 1, 2]),
            list(3, &[]),
        ];
        let ms = evaluate_system(&lists, &rel, &pop, &opts, 0, 4).unwrap();
        assert_eq!(ms.len(), 6);
        for m in &ms {
            assert_eq!(m.users, [0, 2]);
            assert_eq!((m.config, m.fold, m.cutoff), (0, 4, 3));
        }
        let prec = ms.iter().find(|m| m.metric == Metric::Precision).unwrap();
        assert_eq!(prec.values, [2.0 / 3.0, 1.0 / 3.0]);
        assert_close(prec.mean(), 0.5);
        for m in &ms {
            let (items, rels): (Vec<&[u32]>, Vec<&[u32]>) =
                (vec![&[1, 3, 2][..], &[3, 0, 4][..]], vec![&[1, 2][..], &[0][..]]);
            for k in 0..2 {
                let want = metric_value(m.metric, items[k], rels[k], &pop, 3, NoveltyDiscount::None);
                assert_eq!(m.values[k], want);
            }
        }

        let one = evaluate_system(&lists[..1], &rel, &pop, &opts, 0, 0).unwrap();
        assert!(one.iter().all(|m| m.len() == 1));
        let err = evaluate_system(&lists[2..], &rel, &pop, &opts, 0, 7).unwrap_err();
        assert_eq!(err, Error::NoEvaluableUsers { fold: 7 });
    }
}
