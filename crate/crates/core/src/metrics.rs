//! Evaluation of reputation results against the ground truth.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::algorithms::ReputationResult;
use crate::dataset::{GroundTruth, RatingScale};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Share of objects (users) treated as relevant when computing AUC.
pub const DEFAULT_RELEVANT_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T> {
    pub delta_q: T,
    pub delta_q_normalized: T,
    /// Absent for algorithms that do not rank users.
    pub kendall_tau_users: Option<T>,
    /// Set when τ_b is undefined because one ranking is completely tied.
    pub tau_degenerate: bool,
    pub auc_objects: T,
    pub auc_users: Option<T>,
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

fn check_finite<T: Scalar>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("finite values are totally ordered")
}

/// RMS error between estimated and true qualities, raw and divided by `R - 1`.
pub fn quality_rmse<T: Scalar>(quality: &[T], true_quality: &[T], r_max: u32) -> Result<(T, T)> {
    check_len(true_quality.len(), quality.len())?;
    if quality.is_empty() {
        return Err(Error::TooFewItems { needed: 1, got: 0 });
    }
    let sum = quality.iter().zip(true_quality).fold(T::zero(), |acc, (&q, &t)| {
        let e = t - q;
        acc + e * e
    });
    let rmse = (sum / T::of_usize(quality.len())).sqrt();
    Ok((rmse, rmse / T::of(f64::from(r_max.max(2) - 1))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KendallTau<T> {
    pub value: T,
    /// One of the two rankings has no untied pair; `value` is then 0.
    pub degenerate: bool,
}

/// Dense integer ranks (ties share a rank) in ascending value order.
fn dense_ranks<T: Scalar>(values: &[T]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| cmp(&values[a], &values[b]));
    let mut ranks = vec![0u32; values.len()];
    let mut rank = 0u32;
    for (k, &i) in order.iter().enumerate() {
        if k > 0 && values[order[k - 1]] != values[i] {
            rank += 1;
        }
        ranks[i] = rank;
    }
    ranks
}

fn tied_pairs(group_sizes: impl Iterator<Item = u64>) -> u64 {
    group_sizes.map(|t| t * (t - 1) / 2).sum()
}

fn run_lengths<K: PartialEq>(keys: impl Iterator<Item = K>) -> Vec<u64> {
    let mut out = Vec::new();
    let mut last: Option<K> = None;
    for k in keys {
        match (&last, out.last_mut()) {
            (Some(prev), Some(n)) if *prev == k => *n += 1,
            _ => out.push(1),
        }
        last = Some(k);
    }
    out
}

/// Sorts `values` and returns the number of strict inversions.
fn count_inversions(values: &mut [u32], scratch: &mut [u32]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = values.split_at_mut(mid);
        let (ls, rs) = scratch.split_at_mut(mid);
        count_inversions(left, ls) + count_inversions(right, rs)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if values[j] < values[i] {
            scratch[k] = values[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            scratch[k] = values[i];
            i += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&values[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&values[j..n]);
    values.copy_from_slice(&scratch[..n]);
    swaps
}

/// Tie-corrected Kendall τ_b between two paired samples (Knight's algorithm).
pub fn tau_b<T: Scalar>(x: &[T], y: &[T]) -> Result<KendallTau<T>> {
    check_len(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::TooFewItems {
            needed: 2,
            got: x.len(),
        });
    }
    check_finite(x)?;
    check_finite(y)?;

    let n = x.len() as u64;
    let xr = dense_ranks(x);
    let yr = dense_ranks(y);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by_key(|&i| (xr[i], yr[i]));

    let total = n * (n - 1) / 2;
    let x_ties = tied_pairs(run_lengths(order.iter().map(|&i| xr[i])).into_iter());
    let joint_ties = tied_pairs(run_lengths(order.iter().map(|&i| (xr[i], yr[i]))).into_iter());
    let mut ys: Vec<u32> = order.iter().map(|&i| yr[i]).collect();
    let mut scratch = vec![0u32; ys.len()];
    let discordant = count_inversions(&mut ys, &mut scratch);
    let y_ties = tied_pairs(run_lengths(ys.iter().copied()).into_iter());

    let untied_x = total - x_ties;
    let untied_y = total - y_ties;
    if untied_x == 0 || untied_y == 0 {
        return Ok(KendallTau {
            value: T::zero(),
            degenerate: true,
        });
    }
    // concordant - discordant
    let score = total as i128 - x_ties as i128 - y_ties as i128 + joint_ties as i128 - 2 * discordant as i128;
    let value = score as f64 / ((untied_x as f64) * (untied_y as f64)).sqrt();
    Ok(KendallTau {
        value: T::of(value),
        degenerate: false,
    })
}

/// Rank correlation between the weight ranking and the true ability ranking
/// (ability ordered by `-σ_i`).
pub fn kendall_tau<T: Scalar>(user_weights: &[T], user_errors: &[T]) -> Result<KendallTau<T>> {
    let ability: Vec<T> = user_errors.iter().map(|&s| -s).collect();
    tau_b(user_weights, &ability)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Items with the largest values are relevant.
    Highest,
    /// Items with the smallest values are relevant.
    Lowest,
}

/// Number of relevant items: `ceil(fraction * n)`, ignoring float noise in the product.
pub fn relevant_count(n: usize, fraction: f64) -> usize {
    let x = fraction * n as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (k as usize).min(n)
}

/// Flags the `ceil(fraction * n)` extreme items; ties at the boundary go to the lower index.
pub fn select_relevant<T: Scalar>(values: &[T], fraction: f64, direction: Direction) -> Result<Vec<bool>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(
            "relevant_fraction",
            format!("must lie in (0, 1), got {fraction}"),
        ));
    }
    check_finite(values)?;
    let k = relevant_count(values.len(), fraction);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let by_value = match direction {
            Direction::Highest => cmp(&values[b], &values[a]),
            Direction::Lowest => cmp(&values[a], &values[b]),
        };
        by_value.then(a.cmp(&b))
    });
    let mut flags = vec![false; values.len()];
    for &i in &order[..k] {
        flags[i] = true;
    }
    Ok(flags)
}

/// Exact Mann–Whitney counts behind an AUC value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AucCounts {
    /// Twice the number of (relevant, irrelevant) pairs won by the relevant
    /// item, with ties counting one (that is, one half, doubled).
    pub twice_wins: u64,
    pub relevant: u64,
    pub irrelevant: u64,
}

impl AucCounts {
    pub fn value<T: Scalar>(&self) -> T {
        let pairs = 2 * self.relevant * self.irrelevant;
        T::of(self.twice_wins as f64 / pairs as f64)
    }
}

/// Rank-sum computation with midranks for tied scores.
pub fn auc_counts<T: Scalar>(scores: &[T], relevant: &[bool]) -> Result<AucCounts> {
    check_len(scores.len(), relevant.len())?;
    check_finite(scores)?;
    let positives = relevant.iter().filter(|&&r| r).count() as u64;
    let negatives = scores.len() as u64 - positives;
    if positives == 0 {
        return Err(Error::NoRelevantItems);
    }
    if negatives == 0 {
        return Err(Error::NoIrrelevantItems);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| cmp(&scores[a], &scores[b]));
    // twice the sum of the (1-based) midranks of the relevant items
    let mut twice_rank_sum = 0u64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let twice_midrank = (start + 1 + end) as u64;
        let hits = order[start..end].iter().filter(|&&i| relevant[i]).count() as u64;
        twice_rank_sum += hits * twice_midrank;
        start = end;
    }
    Ok(AucCounts {
        twice_wins: twice_rank_sum - positives * (positives + 1),
        relevant: positives,
        irrelevant: negatives,
    })
}

/// Probability that a random relevant item scores above a random irrelevant one (ties ½).
pub fn auc<T: Scalar>(scores: &[T], relevant: &[bool]) -> Result<T> {
    Ok(auc_counts(scores, relevant)?.value())
}

/// Full report with the default 5% relevance fraction.
pub fn evaluate<T: Scalar>(
    result: &ReputationResult<T>,
    truth: &GroundTruth<T>,
    scale: RatingScale,
) -> Result<MetricsReport<T>> {
    evaluate_with(result, truth, scale, DEFAULT_RELEVANT_FRACTION)
}

pub fn evaluate_with<T: Scalar>(
    result: &ReputationResult<T>,
    truth: &GroundTruth<T>,
    scale: RatingScale,
    relevant_fraction: f64,
) -> Result<MetricsReport<T>> {
    check_len(truth.num_users(), result.weights.len())?;
    let (delta_q, delta_q_normalized) = quality_rmse(&result.quality, &truth.true_quality, scale.r_max())?;
    let top_objects = select_relevant(&truth.true_quality, relevant_fraction, Direction::Highest)?;
    let auc_objects = auc(&result.quality, &top_objects)?;

    let (kendall_tau_users, tau_degenerate, auc_users) = if result.algorithm.ranks_users() {
        let tau = kendall_tau(&result.weights, &truth.user_error)?;
        let best_users = select_relevant(&truth.user_error, relevant_fraction, Direction::Lowest)?;
        let auc_users = auc(&result.weights, &best_users)?;
        (Some(tau.value), tau.degenerate, Some(auc_users))
    } else {
        (None, false, None)
    };

    Ok(MetricsReport {
        delta_q,
        delta_q_normalized,
        kendall_tau_users,
        tau_degenerate,
        auc_objects,
        auc_users,
    })
}
