//! Monte Carlo sweeps over synthetic datasets.
//!
//! Two sweep shapes are supported: varying the upper error bound `σ_max` at
//! a fixed scale (optionally for both continuous and discrete ratings), and
//! varying the discrete resolution `R` with `σ_max = R - 1`. Each grid point
//! is evaluated on `realizations` independently seeded datasets and the
//! metrics are averaged per (grid point, mode, algorithm) cell.
//!
//! Within one realization every grid point and every rating mode is rendered
//! from the same [`LatentSample`], so qualities, error ranks, rated pairs and
//! noise draws are shared; only their scaling and quantization change.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_algorithm, AlgorithmConfig};
use crate::dataset::{prune_isolated, RatingMode, RatingScale};
use crate::error::{invalid, Error, Result};
use crate::metrics::{evaluate_with, MetricsReport, DEFAULT_RELEVANT_FRACTION};
use crate::scalar::Scalar;
use crate::synthgen::LatentSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub num_users: usize,
    pub num_objects: usize,
    pub sparsity: f64,
    /// Master seed; realization seeds are derived from it.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMinRule {
    Zero,
    EighthOfMax,
}

impl SigmaMinRule {
    pub fn sigma_min(self, sigma_max: f64) -> f64 {
        match self {
            SigmaMinRule::Zero => 0.0,
            SigmaMinRule::EighthOfMax => sigma_max / 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    SigmaMax {
        r_max: u32,
        #[serde(default)]
        sigma_min: f64,
        #[serde(default = "default_sigma_grid")]
        sigma_max_grid: Vec<f64>,
        #[serde(default = "default_modes")]
        modes: Vec<RatingMode>,
    },
    Resolution {
        #[serde(default = "default_r_grid")]
        r_grid: Vec<u32>,
        sigma_min_rule: SigmaMinRule,
    },
}

/// `0, 0.25, ..., 4`.
pub fn default_sigma_grid() -> Vec<f64> {
    (0..=16).map(|i| f64::from(i) * 0.25).collect()
}

/// `2, 3, ..., 20`.
pub fn default_r_grid() -> Vec<u32> {
    (2..=20).collect()
}

fn default_modes() -> Vec<RatingMode> {
    RatingMode::ALL.to_vec()
}

fn default_fraction() -> f64 {
    DEFAULT_RELEVANT_FRACTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub population: PopulationConfig,
    pub sweep: Sweep,
    #[serde(default = "AlgorithmConfig::all")]
    pub algorithms: Vec<AlgorithmConfig>,
    pub realizations: usize,
    #[serde(default = "default_fraction")]
    pub relevant_fraction: f64,
}

fn strictly_increasing<V: PartialOrd>(values: &[V]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let p = &self.population;
        if p.num_users == 0 || p.num_objects == 0 {
            return Err(invalid("population", "num_users and num_objects must be positive"));
        }
        if !(p.sparsity > 0.0 && p.sparsity <= 1.0) {
            return Err(invalid("sparsity", format!("must lie in (0, 1], got {}", p.sparsity)));
        }
        if self.realizations == 0 {
            return Err(invalid("realizations", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(invalid("algorithms", "at least one algorithm is required"));
        }
        for a in &self.algorithms {
            a.validate()?;
        }
        if !(self.relevant_fraction > 0.0 && self.relevant_fraction < 1.0) {
            return Err(invalid(
                "relevant_fraction",
                format!("must lie in (0, 1), got {}", self.relevant_fraction),
            ));
        }
        match &self.sweep {
            Sweep::SigmaMax {
                r_max,
                sigma_min,
                sigma_max_grid,
                modes,
            } => {
                RatingScale::new(*r_max, RatingMode::Continuous)?;
                if !(*sigma_min >= 0.0 && sigma_min.is_finite()) {
                    return Err(invalid(
                        "sigma_min",
                        format!("must be finite and >= 0, got {sigma_min}"),
                    ));
                }
                if sigma_max_grid.is_empty() || !strictly_increasing(sigma_max_grid) {
                    return Err(invalid("sigma_max_grid", "must be non-empty and strictly increasing"));
                }
                if sigma_max_grid[0] < *sigma_min || !sigma_max_grid.iter().all(|s| s.is_finite()) {
                    return Err(invalid("sigma_max_grid", "values must be finite and >= sigma_min"));
                }
                if modes.is_empty() || (modes.len() == 2 && modes[0] == modes[1]) {
                    return Err(invalid("modes", "must list distinct rating modes"));
                }
            }
            Sweep::Resolution { r_grid, .. } => {
                if r_grid.is_empty() || !strictly_increasing(r_grid) {
                    return Err(invalid("r_grid", "must be non-empty and strictly increasing"));
                }
                if r_grid[0] < 2 {
                    return Err(invalid("r_grid", "every R must be at least 2"));
                }
            }
        }
        Ok(())
    }

    pub fn variable(&self) -> SweepVariable {
        match self.sweep {
            Sweep::SigmaMax { .. } => SweepVariable::SigmaMax,
            Sweep::Resolution { .. } => SweepVariable::RMax,
        }
    }

    /// Number of rows the sweep emits.
    pub fn num_cells(&self) -> usize {
        let per_point = self.algorithms.len();
        match &self.sweep {
            Sweep::SigmaMax {
                sigma_max_grid, modes, ..
            } => sigma_max_grid.len() * modes.len() * per_point,
            Sweep::Resolution { r_grid, .. } => r_grid.len() * per_point,
        }
    }

    fn grid(&self) -> Vec<GridPoint> {
        match &self.sweep {
            Sweep::SigmaMax {
                r_max,
                sigma_min,
                sigma_max_grid,
                modes,
            } => sigma_max_grid
                .iter()
                .map(|&sigma_max| GridPoint {
                    value: sigma_max,
                    r_max: *r_max,
                    sigma_min: *sigma_min,
                    sigma_max,
                    modes: modes.clone(),
                })
                .collect(),
            Sweep::Resolution { r_grid, sigma_min_rule } => r_grid
                .iter()
                .map(|&r| {
                    let sigma_max = f64::from(r - 1);
                    GridPoint {
                        value: f64::from(r),
                        r_max: r,
                        sigma_min: sigma_min_rule.sigma_min(sigma_max),
                        sigma_max,
                        modes: vec![RatingMode::Discrete],
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SigmaMax,
    RMax,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::SigmaMax => "sigma_max",
            SweepVariable::RMax => "r_max",
        }
    }
}

#[derive(Debug, Clone)]
struct GridPoint {
    value: f64,
    r_max: u32,
    sigma_min: f64,
    sigma_max: f64,
    modes: Vec<RatingMode>,
}

/// Per-metric values of a cell; used for both means and standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    pub delta_q: T,
    pub delta_q_normalized: T,
    pub kendall_tau_users: Option<T>,
    pub auc_objects: T,
    pub auc_users: Option<T>,
}

/// One algorithm run inside a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRun<T> {
    pub report: MetricsReport<T>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate<T> {
    pub mean: MetricSummary<T>,
    pub standard_error: MetricSummary<T>,
    pub runs: usize,
    pub nonconverged: usize,
}

fn mean_and_se<T: Scalar>(values: &[T]) -> (T, T) {
    let n = T::of_usize(values.len());
    let mean = values.iter().fold(T::zero(), |acc, &v| acc + v) / n;
    if values.len() < 2 {
        return (mean, T::zero());
    }
    let ss = values.iter().fold(T::zero(), |acc, &v| acc + (v - mean) * (v - mean));
    let sd = (ss / T::of_usize(values.len() - 1)).sqrt();
    (mean, sd / n.sqrt())
}

fn optional_stats<T: Scalar>(values: impl Iterator<Item = Option<T>>) -> (Option<T>, Option<T>) {
    let present: Vec<T> = values.flatten().collect();
    if present.is_empty() {
        (None, None)
    } else {
        let (m, se) = mean_and_se(&present);
        (Some(m), Some(se))
    }
}

/// Mean and standard error (sample standard deviation over `√n`) of every metric.
pub fn aggregate<T: Scalar>(runs: &[CellRun<T>]) -> Result<Aggregate<T>> {
    if runs.is_empty() {
        return Err(Error::TooFewItems { needed: 1, got: 0 });
    }
    let column = |f: fn(&MetricsReport<T>) -> T| -> (T, T) {
        let values: Vec<T> = runs.iter().map(|r| f(&r.report)).collect();
        mean_and_se(&values)
    };
    let (dq, dq_se) = column(|m| m.delta_q);
    let (dqn, dqn_se) = column(|m| m.delta_q_normalized);
    let (auc_o, auc_o_se) = column(|m| m.auc_objects);
    let (tau, tau_se) = optional_stats(runs.iter().map(|r| r.report.kendall_tau_users));
    let (auc_u, auc_u_se) = optional_stats(runs.iter().map(|r| r.report.auc_users));
    Ok(Aggregate {
        mean: MetricSummary {
            delta_q: dq,
            delta_q_normalized: dqn,
            kendall_tau_users: tau,
            auc_objects: auc_o,
            auc_users: auc_u,
        },
        standard_error: MetricSummary {
            delta_q: dq_se,
            delta_q_normalized: dqn_se,
            kendall_tau_users: tau_se,
            auc_objects: auc_o_se,
            auc_users: auc_u_se,
        },
        runs: runs.len(),
        nonconverged: runs.iter().filter(|r| !r.converged).count(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub variable: SweepVariable,
    pub value: f64,
    pub mode: RatingMode,
    pub algorithm: String,
    pub stats: Aggregate<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Scalar> SweepResult<T> {
    pub fn find(&self, value: f64, mode: RatingMode, algorithm: &str) -> Option<&SweepRow<T>> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.mode == mode && r.algorithm == algorithm)
    }
}

/// Seed of realization `index`: a SplitMix64 step keyed on the master seed.
pub fn realization_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs every algorithm on every mode of one grid point for one realization.
/// Output is indexed `[mode][algorithm]`.
fn run_cell<T: Scalar>(spec: &ExperimentSpec, point: &GridPoint, realization: usize) -> Result<Vec<Vec<CellRun<T>>>> {
    let p = &spec.population;
    let latent = LatentSample::draw(
        p.num_users,
        p.num_objects,
        p.sparsity,
        realization_seed(p.seed, realization),
    )?;
    point
        .modes
        .iter()
        .map(|&mode| {
            let scale = RatingScale::new(point.r_max, mode)?;
            let (data, truth) = latent.render::<T>(scale, point.sigma_min, point.sigma_max)?;
            let pruned = prune_isolated(&data, &truth)?;
            spec.algorithms
                .iter()
                .map(|config| {
                    let result = run_algorithm(&pruned.dataset, config)?;
                    let report = evaluate_with(&result, &pruned.truth, scale, spec.relevant_fraction)?;
                    Ok(CellRun {
                        report,
                        converged: result.converged,
                    })
                })
                .collect()
        })
        .collect()
}

fn run_grid<T: Scalar, F>(spec: &ExperimentSpec, mut on_point: F) -> Result<SweepResult<T>>
where
    F: FnMut(&[SweepRow<T>]) -> Result<()>,
{
    spec.validate()?;
    let variable = spec.variable();
    let mut rows = Vec::with_capacity(spec.num_cells());
    for point in spec.grid() {
        let cells: Vec<Vec<Vec<CellRun<T>>>> = (0..spec.realizations)
            .into_par_iter()
            .map(|r| run_cell(spec, &point, r))
            .collect::<Result<_>>()?;
        let start = rows.len();
        for (m, &mode) in point.modes.iter().enumerate() {
            for (a, config) in spec.algorithms.iter().enumerate() {
                let runs: Vec<CellRun<T>> = cells.iter().map(|c| c[m][a]).collect();
                rows.push(SweepRow {
                    variable,
                    value: point.value,
                    mode,
                    algorithm: config.label(),
                    stats: aggregate(&runs)?,
                });
            }
        }
        on_point(&rows[start..])?;
    }
    Ok(SweepResult { rows })
}

fn with_workers<R: Send>(workers: usize, job: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    Ok(pool.install(job))
}

/// Runs a sweep on `workers` threads (0 = rayon default), handing the rows of
/// each completed grid point to `on_point` before moving to the next.
pub fn run_sweep_with<T, F>(spec: &ExperimentSpec, workers: usize, on_point: F) -> Result<SweepResult<T>>
where
    T: Scalar,
    F: FnMut(&[SweepRow<T>]) -> Result<()> + Send,
{
    with_workers(workers, || run_grid(spec, on_point))?
}

pub fn run_sweep<T: Scalar>(spec: &ExperimentSpec) -> Result<SweepResult<T>> {
    run_sweep_with(spec, 0, |_| Ok(()))
}

/// `σ_max` sweep; fails if the spec describes a different sweep.
pub fn run_sigma_sweep<T: Scalar>(spec: &ExperimentSpec) -> Result<SweepResult<T>> {
    match spec.sweep {
        Sweep::SigmaMax { .. } => run_sweep(spec),
        Sweep::Resolution { .. } => Err(invalid("sweep", "expected a sigma_max sweep")),
    }
}

/// Resolution sweep over `R` with discrete ratings.
pub fn run_resolution_sweep<T: Scalar>(spec: &ExperimentSpec) -> Result<SweepResult<T>> {
    match spec.sweep {
        Sweep::Resolution { .. } => run_sweep(spec),
        Sweep::SigmaMax { .. } => Err(invalid("sweep", "expected a resolution sweep")),
    }
}
