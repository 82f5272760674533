//! Artificial rating datasets.
//!
//! Every object gets a true quality `Q_α ~ U[1, R]`, every user an error level
//! `σ_i ~ U[σ_min, σ_max]`. A fixed number of distinct user/object pairs is
//! sampled and each pair receives the estimate `Q_α + E_iα` with
//! `E_iα ~ U[-σ_i, σ_i]`, which is then optionally rounded and finally
//! truncated into `[1, R]`.
//!
//! The random draws are split over four independent ChaCha streams derived
//! from one seed (qualities, error levels, pairs, noise). The draws are kept
//! in unit form (fractions in `[0, 1)` and noise in `[-1, 1]`) so that the
//! same realization can be rendered at any scale, error range or rating
//! mode.

use std::collections::HashSet;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroundTruth, RatingDataset, RatingMode, RatingScale};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

const QUALITY_STREAM: u64 = 0;
const ERROR_STREAM: u64 = 1;
const PAIR_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub num_users: usize,
    pub num_objects: usize,
    #[serde(default = "default_r_max")]
    pub r_max: u32,
    #[serde(default)]
    pub sigma_min: f64,
    #[serde(default = "default_sigma_max")]
    pub sigma_max: f64,
    #[serde(default = "default_sparsity")]
    pub sparsity: f64,
    #[serde(default = "default_mode")]
    pub mode: RatingMode,
    #[serde(default)]
    pub seed: u64,
}

fn default_r_max() -> u32 {
    5
}

fn default_sigma_max() -> f64 {
    1.0
}

fn default_sparsity() -> f64 {
    0.1
}

fn default_mode() -> RatingMode {
    RatingMode::Continuous
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_users: 1000,
            num_objects: 1000,
            r_max: default_r_max(),
            sigma_min: 0.0,
            sigma_max: default_sigma_max(),
            sparsity: default_sparsity(),
            mode: default_mode(),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(invalid("num_users", "must be positive"));
        }
        if self.num_objects == 0 {
            return Err(invalid("num_objects", "must be positive"));
        }
        if self.r_max < 2 {
            return Err(invalid("r_max", format!("must be at least 2, got {}", self.r_max)));
        }
        if !(self.sigma_min >= 0.0 && self.sigma_min.is_finite()) {
            return Err(invalid(
                "sigma_min",
                format!("must be a finite value >= 0, got {}", self.sigma_min),
            ));
        }
        if !(self.sigma_max >= self.sigma_min && self.sigma_max.is_finite()) {
            return Err(invalid(
                "sigma_max",
                format!(
                    "must be finite and >= sigma_min ({}), got {}",
                    self.sigma_min, self.sigma_max
                ),
            ));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(invalid(
                "sparsity",
                format!("must lie in (0, 1], got {}", self.sparsity),
            ));
        }
        Ok(())
    }

    pub fn scale(&self) -> Result<RatingScale> {
        RatingScale::new(self.r_max, self.mode)
    }

    /// Number of rated pairs, `η|U||O|` rounded half-up.
    pub fn num_pairs(&self) -> usize {
        let total = self.num_users as f64 * self.num_objects as f64;
        let k = (self.sparsity * total + 0.5).floor() as usize;
        k.min(self.num_users * self.num_objects)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn unit_fractions(seed: u64, id: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, id);
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

fn unit_noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, NOISE_STREAM);
    let dist = Uniform::new_inclusive(-1.0, 1.0);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

/// Robert Floyd's sampling of `k` distinct indices from `0..n`, returned sorted.
fn floyd_sample<R: Rng>(rng: &mut R, n: u64, k: u64) -> Vec<u64> {
    debug_assert!(k <= n);
    let mut chosen = HashSet::with_capacity(k as usize);
    for j in (n - k)..n {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut out: Vec<u64> = chosen.into_iter().collect();
    out.sort_unstable();
    out
}

fn lerp<T: Scalar>(lo: T, hi: T, fraction: f64) -> T {
    lo + (hi - lo) * T::of(fraction)
}

/// Draws `Q_α ~ U[1, R]` and `σ_i ~ U[σ_min, σ_max]`.
pub fn generate_ground_truth<T: Scalar>(config: &GeneratorConfig) -> Result<GroundTruth<T>> {
    config.validate()?;
    let qualities = unit_fractions(config.seed, QUALITY_STREAM, config.num_objects);
    let errors = unit_fractions(config.seed, ERROR_STREAM, config.num_users);
    Ok(truth_from_fractions(
        &qualities,
        &errors,
        config.r_max,
        T::of(config.sigma_min),
        T::of(config.sigma_max),
    ))
}

fn truth_from_fractions<T: Scalar>(
    qualities: &[f64],
    errors: &[f64],
    r_max: u32,
    sigma_min: T,
    sigma_max: T,
) -> GroundTruth<T> {
    let top = T::of(f64::from(r_max));
    GroundTruth {
        true_quality: qualities.iter().map(|&u| lerp(T::one(), top, u)).collect(),
        user_error: errors.iter().map(|&u| lerp(sigma_min, sigma_max, u)).collect(),
    }
}

/// Samples `round(η|U||O|)` distinct `(user, object)` pairs, sorted.
pub fn sample_pairs(config: &GeneratorConfig) -> Result<Vec<(usize, usize)>> {
    config.validate()?;
    Ok(pairs_for(
        config.seed,
        config.num_users,
        config.num_objects,
        config.num_pairs(),
    ))
}

fn pairs_for(seed: u64, num_users: usize, num_objects: usize, k: usize) -> Vec<(usize, usize)> {
    let mut rng = stream(seed, PAIR_STREAM);
    let n = num_users as u64 * num_objects as u64;
    floyd_sample(&mut rng, n, k as u64)
        .into_iter()
        .map(|idx| ((idx / num_objects as u64) as usize, (idx % num_objects as u64) as usize))
        .collect()
}

/// Maps a quality estimate to a rating: rounding (half away from zero) in
/// discrete mode, then truncation into `[1, R]`.
pub fn quantize<T: Scalar>(estimate: T, scale: RatingScale) -> T {
    let v = match scale.mode() {
        RatingMode::Continuous => estimate,
        RatingMode::Discrete => estimate.round(),
    };
    v.max(T::one()).min(scale.upper())
}

/// Produces one rating per pair from the noisy estimate `Q_α + E_iα`.
pub fn generate_ratings<T: Scalar>(
    config: &GeneratorConfig,
    truth: &GroundTruth<T>,
    pairs: &[(usize, usize)],
) -> Result<RatingDataset<T>> {
    config.validate()?;
    if truth.num_users() != config.num_users {
        return Err(Error::LengthMismatch {
            expected: config.num_users,
            got: truth.num_users(),
        });
    }
    if truth.num_objects() != config.num_objects {
        return Err(Error::LengthMismatch {
            expected: config.num_objects,
            got: truth.num_objects(),
        });
    }
    let noise = unit_noise(config.seed, pairs.len());
    render(truth, pairs, &noise, config.scale()?)
}

fn render<T: Scalar>(
    truth: &GroundTruth<T>,
    pairs: &[(usize, usize)],
    noise: &[f64],
    scale: RatingScale,
) -> Result<RatingDataset<T>> {
    let triples = pairs.iter().zip(noise).map(|(&(u, o), &v)| {
        let estimate = truth.true_quality[o] + truth.user_error[u] * T::of(v);
        (u, o, quantize(estimate, scale))
    });
    RatingDataset::new(triples, truth.num_users(), truth.num_objects(), scale)
}

/// Ground truth and ratings in one call.
pub fn generate<T: Scalar>(config: &GeneratorConfig) -> Result<(RatingDataset<T>, GroundTruth<T>)> {
    let truth = generate_ground_truth(config)?;
    let pairs = sample_pairs(config)?;
    let data = generate_ratings(config, &truth, &pairs)?;
    Ok((data, truth))
}

/// All random draws of one realization in scale-free form.
///
/// Rendering with the parameters of a [`GeneratorConfig`] reproduces exactly
/// what [`generate`] returns for that config.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub quality_fractions: Vec<f64>,
    pub error_fractions: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub unit_noise: Vec<f64>,
}

impl LatentSample {
    pub fn draw(num_users: usize, num_objects: usize, sparsity: f64, seed: u64) -> Result<Self> {
        let config = GeneratorConfig {
            num_users,
            num_objects,
            sparsity,
            seed,
            ..GeneratorConfig::default()
        };
        config.validate()?;
        let pairs = pairs_for(seed, num_users, num_objects, config.num_pairs());
        Ok(Self {
            quality_fractions: unit_fractions(seed, QUALITY_STREAM, num_objects),
            error_fractions: unit_fractions(seed, ERROR_STREAM, num_users),
            unit_noise: unit_noise(seed, pairs.len()),
            pairs,
        })
    }

    pub fn num_users(&self) -> usize {
        self.error_fractions.len()
    }

    pub fn num_objects(&self) -> usize {
        self.quality_fractions.len()
    }

    pub fn ground_truth<T: Scalar>(&self, r_max: u32, sigma_min: f64, sigma_max: f64) -> GroundTruth<T> {
        truth_from_fractions(
            &self.quality_fractions,
            &self.error_fractions,
            r_max,
            T::of(sigma_min),
            T::of(sigma_max),
        )
    }

    pub fn render<T: Scalar>(
        &self,
        scale: RatingScale,
        sigma_min: f64,
        sigma_max: f64,
    ) -> Result<(RatingDataset<T>, GroundTruth<T>)> {
        let truth = self.ground_truth(scale.r_max(), sigma_min, sigma_max);
        let data = render(&truth, &self.pairs, &self.unit_noise, scale)?;
        Ok((data, truth))
    }
}
