//! Co-determination reputation algorithms.
//!
//! All four algorithms share the same outer loop: object qualities are the
//! weighted mean of their ratings, user weights are recomputed from how far
//! each user's ratings sit from those qualities, and the two steps alternate
//! from `w_i = 1` until the RMS change of the quality vector drops below the
//! threshold. Only the weight step differs between algorithms, so it is a
//! [`WeightUpdate`] strategy plugged into [`iterate`].

use serde::{Deserialize, Serialize};

use crate::dataset::RatingDataset;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    /// Arithmetic average.
    Aa,
    /// Mizzaro's steadiness-weighted agreement.
    Mizz,
    /// Yu–Zhang–Laureti–Moret power-law penalty on divergence.
    Yzlm,
    /// de Kerchove–Van Dooren linear penalty on divergence.
    Dkvd,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::Aa,
        AlgorithmKind::Mizz,
        AlgorithmKind::Yzlm,
        AlgorithmKind::Dkvd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Aa => "AA",
            AlgorithmKind::Mizz => "Mizz",
            AlgorithmKind::Yzlm => "YZLM",
            AlgorithmKind::Dkvd => "dKVD",
        }
    }

    /// Lower-case identifier used on the command line and in config files.
    pub fn key(self) -> &'static str {
        match self {
            AlgorithmKind::Aa => "aa",
            AlgorithmKind::Mizz => "mizz",
            AlgorithmKind::Yzlm => "yzlm",
            AlgorithmKind::Dkvd => "dkvd",
        }
    }

    /// Whether the algorithm produces a ranking of users.
    pub fn ranks_users(self) -> bool {
        self != AlgorithmKind::Aa
    }
}

impl std::fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.key().eq_ignore_ascii_case(s) || k.name() == s)
            .ok_or_else(|| invalid("algorithm", format!("unknown algorithm `{s}`")))
    }
}

pub const DEFAULT_BETA: f64 = 1.0;
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    /// Penalty exponent, YZLM only.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Divergence offset for YZLM and dKVD.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_threshold")]
    pub convergence_threshold: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind) -> Self {
        Self {
            kind,
            beta: DEFAULT_BETA,
            epsilon: DEFAULT_EPSILON,
            convergence_threshold: DEFAULT_THRESHOLD,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    /// The four algorithms with default constants.
    pub fn all() -> Vec<Self> {
        AlgorithmKind::ALL.into_iter().map(Self::new).collect()
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(
                "epsilon",
                format!("must be finite and > 0, got {}", self.epsilon),
            ));
        }
        if !(self.convergence_threshold > 0.0 && self.convergence_threshold.is_finite()) {
            return Err(invalid(
                "convergence_threshold",
                format!("must be > 0, got {}", self.convergence_threshold),
            ));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be at least 1"));
        }
        Ok(())
    }

    /// Display label, e.g. `YZLM` or `YZLM(beta=0.5)` for non-default exponents.
    pub fn label(&self) -> String {
        if self.kind == AlgorithmKind::Yzlm && self.beta != DEFAULT_BETA {
            format!("{}(beta={})", self.kind.name(), self.beta)
        } else {
            self.kind.name().to_string()
        }
    }
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self::new(AlgorithmKind::Yzlm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReputationResult<T> {
    pub algorithm: AlgorithmKind,
    pub weights: Vec<T>,
    pub quality: Vec<T>,
    pub iterations_used: usize,
    pub final_delta: T,
    pub converged: bool,
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// `q_α = Σ w_i r_iα / Σ w_i` over the raters of each object.
pub fn weighted_quality<T: Scalar>(dataset: &RatingDataset<T>, weights: &[T]) -> Result<Vec<T>> {
    check_len(dataset.num_users(), weights.len())?;
    (0..dataset.num_objects())
        .map(|o| {
            let (users, ratings) = dataset.object_column(o);
            let (num, den) = weighted_sums(users, ratings, weights);
            if den > T::zero() {
                Ok(num / den)
            } else {
                Err(Error::ZeroWeightDenominator(o))
            }
        })
        .collect()
}

fn weighted_sums<T: Scalar>(users: &[usize], ratings: &[T], weights: &[T]) -> (T, T) {
    users
        .iter()
        .zip(ratings)
        .fold((T::zero(), T::zero()), |(num, den), (&u, &r)| {
            (num + weights[u] * r, den + weights[u])
        })
}

/// Quality step used inside the iteration: objects whose raters all carry
/// zero weight fall back to the plain mean of their ratings.
fn quality_step<T: Scalar>(dataset: &RatingDataset<T>, weights: &[T], out: &mut [T]) {
    for (o, q) in out.iter_mut().enumerate() {
        let (users, ratings) = dataset.object_column(o);
        let (num, den) = weighted_sums(users, ratings, weights);
        *q = if den > T::zero() { num / den } else { mean(ratings) };
    }
}

fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, &v| acc + v) / T::of_usize(values.len())
}

/// Plain arithmetic average of every object's ratings with unit weights.
pub fn run_aa<T: Scalar>(dataset: &RatingDataset<T>) -> Result<ReputationResult<T>> {
    ensure_connected(dataset)?;
    let weights = vec![T::one(); dataset.num_users()];
    let quality = weighted_quality(dataset, &weights)?;
    Ok(ReputationResult {
        algorithm: AlgorithmKind::Aa,
        weights,
        quality,
        iterations_used: 1,
        final_delta: T::zero(),
        converged: true,
    })
}

/// Mizzaro's agreement `g = 1 - sqrt(|r - q| / Δr)`.
pub fn mizzaro_disagreement<T: Scalar>(rating: T, quality: T, delta_r: T) -> T {
    let gap = (rating - quality).abs();
    debug_assert!(
        gap <= delta_r * (T::one() + T::of(1e-9)),
        "rating {rating} and quality {quality} further apart than the scale width {delta_r}"
    );
    // rounding in the weighted mean can push the gap a few ulps past Δr
    T::one() - (gap / delta_r).min(T::one()).sqrt()
}

/// Object steadiness `s_α = Σ_{j ∈ U_α} w_j`.
pub fn steadiness<T: Scalar>(dataset: &RatingDataset<T>, weights: &[T]) -> Vec<T> {
    (0..dataset.num_objects())
        .map(|o| {
            let (users, _) = dataset.object_column(o);
            users.iter().fold(T::zero(), |acc, &u| acc + weights[u])
        })
        .collect()
}

/// Mizzaro's weight step: each user's steadiness-weighted mean agreement.
pub fn mizzaro_weight_update<T: Scalar>(dataset: &RatingDataset<T>, weights: &[T], quality: &[T]) -> Result<Vec<T>> {
    check_len(dataset.num_users(), weights.len())?;
    check_len(dataset.num_objects(), quality.len())?;
    let mut out = vec![T::zero(); weights.len()];
    let steady = steadiness(dataset, weights);
    for (u, w) in out.iter_mut().enumerate() {
        let (num, den) = mizzaro_sums(dataset, u, &steady, quality);
        if den > T::zero() {
            *w = num / den;
        } else {
            return Err(Error::ZeroSteadinessDenominator(u));
        }
    }
    Ok(out)
}

fn mizzaro_sums<T: Scalar>(dataset: &RatingDataset<T>, user: usize, steady: &[T], quality: &[T]) -> (T, T) {
    let width = dataset.scale().width::<T>();
    let (objects, ratings) = dataset.user_row(user);
    objects
        .iter()
        .zip(ratings)
        .fold((T::zero(), T::zero()), |(num, den), (&o, &r)| {
            let g = mizzaro_disagreement(r, quality[o], width);
            (num + steady[o] * g, den + steady[o])
        })
}

/// Mean squared deviation `d_i` of each user's ratings from the qualities.
pub fn divergence<T: Scalar>(dataset: &RatingDataset<T>, quality: &[T]) -> Result<Vec<T>> {
    check_len(dataset.num_objects(), quality.len())?;
    let mut out = vec![T::zero(); dataset.num_users()];
    divergence_into(dataset, quality, &mut out);
    Ok(out)
}

fn divergence_into<T: Scalar>(dataset: &RatingDataset<T>, quality: &[T], out: &mut [T]) {
    for (u, d) in out.iter_mut().enumerate() {
        let (objects, ratings) = dataset.user_row(u);
        let sum = objects.iter().zip(ratings).fold(T::zero(), |acc, (&o, &r)| {
            let e = r - quality[o];
            acc + e * e
        });
        *d = sum / T::of_usize(objects.len());
    }
}

/// `w_i = (d_i + ε)^(-β)`.
pub fn yzlm_weight_update<T: Scalar>(divergences: &[T], beta: T, epsilon: T) -> Vec<T> {
    divergences.iter().map(|&d| yzlm_weight(d, beta, epsilon)).collect()
}

fn yzlm_weight<T: Scalar>(d: T, beta: T, epsilon: T) -> T {
    if beta == T::zero() {
        T::one()
    } else {
        (d + epsilon).powf(-beta)
    }
}

/// `w_i = 1 - k d_i` with `k = 1 / (ε + max_j d_j)`.
pub fn dkvd_weight_update<T: Scalar>(divergences: &[T], epsilon: T) -> Vec<T> {
    let mut out = divergences.to_vec();
    dkvd_in_place(&mut out, epsilon);
    out
}

fn dkvd_in_place<T: Scalar>(values: &mut [T], epsilon: T) {
    let max = values.iter().fold(T::zero(), |m, &d| m.max(d));
    let top = max + epsilon;
    // 1 - k d rearranged so the worst user keeps exactly ε / (ε + max d) > 0
    for v in values.iter_mut() {
        *v = ((max - *v) + epsilon) / top;
    }
}

/// RMS difference between successive quality vectors.
pub fn convergence_delta<T: Scalar>(previous: &[T], next: &[T]) -> T {
    assert_eq!(previous.len(), next.len(), "quality vectors differ in length");
    if previous.is_empty() {
        return T::zero();
    }
    let sum = previous.iter().zip(next).fold(T::zero(), |acc, (&a, &b)| {
        let e = a - b;
        acc + e * e
    });
    (sum / T::of_usize(previous.len())).sqrt()
}

/// One weight step of a co-determination algorithm.
pub trait WeightUpdate<T: Scalar> {
    /// Replaces `weights` by new weights given the qualities they produced.
    fn update(&mut self, dataset: &RatingDataset<T>, quality: &[T], weights: &mut [T]);
}

#[derive(Debug, Default)]
pub struct Mizzaro;

impl<T: Scalar> WeightUpdate<T> for Mizzaro {
    fn update(&mut self, dataset: &RatingDataset<T>, quality: &[T], weights: &mut [T]) {
        let steady = steadiness(dataset, weights);
        let mut agreement = Vec::new();
        for (u, w) in weights.iter_mut().enumerate() {
            let (num, den) = mizzaro_sums(dataset, u, &steady, quality);
            *w = if den > T::zero() {
                num / den
            } else {
                // no steadiness anywhere on this user's objects: unweighted agreement
                let width = dataset.scale().width::<T>();
                let (objects, ratings) = dataset.user_row(u);
                agreement.clear();
                agreement.extend(
                    objects
                        .iter()
                        .zip(ratings)
                        .map(|(&o, &r)| mizzaro_disagreement(r, quality[o], width)),
                );
                mean(&agreement)
            };
        }
    }
}

#[derive(Debug)]
pub struct Yzlm<T> {
    pub beta: T,
    pub epsilon: T,
}

impl<T: Scalar> WeightUpdate<T> for Yzlm<T> {
    fn update(&mut self, dataset: &RatingDataset<T>, quality: &[T], weights: &mut [T]) {
        divergence_into(dataset, quality, weights);
        for w in weights.iter_mut() {
            *w = yzlm_weight(*w, self.beta, self.epsilon);
        }
    }
}

#[derive(Debug)]
pub struct Dkvd<T> {
    pub epsilon: T,
}

impl<T: Scalar> WeightUpdate<T> for Dkvd<T> {
    fn update(&mut self, dataset: &RatingDataset<T>, quality: &[T], weights: &mut [T]) {
        divergence_into(dataset, quality, weights);
        dkvd_in_place(weights, self.epsilon);
    }
}

fn ensure_connected<T: Scalar>(dataset: &RatingDataset<T>) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let isolated = (0..dataset.num_users()).any(|u| dataset.user_degree(u) == 0)
        || (0..dataset.num_objects()).any(|o| dataset.object_degree(o) == 0);
    if isolated {
        Err(Error::IsolatedEntities)
    } else {
        Ok(())
    }
}

/// Alternates quality and weight steps from `weights` until the quality
/// vector moves by less than `threshold` or `max_iterations` weight steps
/// have been taken.
pub fn iterate<T: Scalar, U: WeightUpdate<T>>(
    dataset: &RatingDataset<T>,
    update: &mut U,
    algorithm: AlgorithmKind,
    mut weights: Vec<T>,
    threshold: T,
    max_iterations: usize,
) -> ReputationResult<T> {
    let mut quality = vec![T::zero(); dataset.num_objects()];
    let mut next = quality.clone();
    quality_step(dataset, &weights, &mut quality);

    let mut iterations_used = 0;
    let mut final_delta = T::infinity();
    let mut converged = false;
    while iterations_used < max_iterations {
        update.update(dataset, &quality, &mut weights);
        quality_step(dataset, &weights, &mut next);
        final_delta = convergence_delta(&quality, &next);
        std::mem::swap(&mut quality, &mut next);
        iterations_used += 1;
        if final_delta < threshold {
            converged = true;
            break;
        }
    }

    ReputationResult {
        algorithm,
        weights,
        quality,
        iterations_used,
        final_delta,
        converged,
    }
}

/// Runs the configured algorithm from unit weights.
pub fn run_algorithm<T: Scalar>(dataset: &RatingDataset<T>, config: &AlgorithmConfig) -> Result<ReputationResult<T>> {
    if config.kind == AlgorithmKind::Aa {
        config.validate()?;
        return run_aa(dataset);
    }
    run_algorithm_from(dataset, config, vec![T::one(); dataset.num_users()])
}

/// Runs the configured algorithm from the given starting weights.
pub fn run_algorithm_from<T: Scalar>(
    dataset: &RatingDataset<T>,
    config: &AlgorithmConfig,
    initial_weights: Vec<T>,
) -> Result<ReputationResult<T>> {
    config.validate()?;
    ensure_connected(dataset)?;
    check_len(dataset.num_users(), initial_weights.len())?;
    if let Some(i) = initial_weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
        return Err(Error::NonFinite(i));
    }
    if !initial_weights.iter().any(|&w| w > T::zero()) {
        return Err(invalid("initial_weights", "at least one weight must be positive"));
    }

    let threshold = T::of(config.convergence_threshold);
    let epsilon = T::of(config.epsilon);
    let max = config.max_iterations;
    let result = match config.kind {
        AlgorithmKind::Aa => {
            let quality = weighted_quality(dataset, &initial_weights)?;
            ReputationResult {
                algorithm: AlgorithmKind::Aa,
                weights: initial_weights,
                quality,
                iterations_used: 1,
                final_delta: T::zero(),
                converged: true,
            }
        }
        AlgorithmKind::Mizz => iterate(
            dataset,
            &mut Mizzaro,
            AlgorithmKind::Mizz,
            initial_weights,
            threshold,
            max,
        ),
        AlgorithmKind::Yzlm => iterate(
            dataset,
            &mut Yzlm {
                beta: T::of(config.beta),
                epsilon,
            },
            AlgorithmKind::Yzlm,
            initial_weights,
            threshold,
            max,
        ),
        AlgorithmKind::Dkvd => iterate(
            dataset,
            &mut Dkvd { epsilon },
            AlgorithmKind::Dkvd,
            initial_weights,
            threshold,
            max,
        ),
    };
    Ok(result)
}
