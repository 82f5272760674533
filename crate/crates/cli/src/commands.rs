//! The three subcommands, callable without going through argument parsing.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use coderank::metrics::DEFAULT_RELEVANT_FRACTION;
use coderank::{AlgorithmConfig, GroundTruth, MetricsReport, RatingScale};
use serde::Serialize;

use crate::config::{ConfigFile, Overrides, RunManifest};
use crate::formats::{self, DatasetPaths, LabeledDataset, ScaleSpec, SweepCsvRow, SweepCsvWriter};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const QUALITY_FILE: &str = "estimated_quality.tsv";
pub const WEIGHTS_FILE: &str = "user_weights.tsv";
pub const REPORT_FILE: &str = "report.json";

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes `ratings.tsv`, `true_quality.tsv`, `user_error.tsv` and the manifest into `out`.
pub fn generate(config_path: &Path, out: &Path, overrides: Overrides) -> Result<DatasetPaths> {
    let name = config_path.display().to_string();
    let file = ConfigFile::load(config_path)?;
    let config = file.generator(&name, &overrides)?;
    create_dir(out)?;

    let (dataset, truth) = coderank::synthgen::generate::<f64>(&config)?;
    let labeled = LabeledDataset::numbered(dataset);
    let paths = DatasetPaths::in_dir(out);
    formats::write_ratings_file(&paths.ratings, &labeled)?;
    formats::write_ground_truth(&paths, &labeled.users, &labeled.objects, &truth)?;

    let manifest = RunManifest::new(
        "generate",
        Some(config_path),
        out,
        overrides,
        ConfigFile::from_generator(config),
    );
    write_text(&out.join(MANIFEST_FILE), &manifest.to_json())?;
    Ok(paths)
}

/// Options of a single algorithm run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub input: PathBuf,
    pub out: PathBuf,
    pub algorithm: AlgorithmConfig,
    pub scale: ScaleSpec,
    pub relevant_fraction: f64,
}

impl RunOptions {
    pub fn new(input: &Path, out: &Path, algorithm: AlgorithmConfig) -> Self {
        Self {
            input: input.to_path_buf(),
            out: out.to_path_buf(),
            algorithm,
            scale: ScaleSpec::default(),
            relevant_fraction: DEFAULT_RELEVANT_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleReport {
    pub r_max: u32,
    pub mode: coderank::RatingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSection {
    pub relevant_fraction: f64,
    #[serde(flatten)]
    pub report: MetricsReport,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub input: PathBuf,
    pub algorithm: AlgorithmConfig,
    pub label: String,
    pub scale: ScaleReport,
    pub num_users: usize,
    pub num_objects: usize,
    pub num_ratings: usize,
    pub converged: bool,
    pub iterations_used: usize,
    pub final_delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSection>,
}

fn load_truth(paths: &DatasetPaths, data: &LabeledDataset) -> Result<Option<GroundTruth>> {
    if !paths.true_quality.exists() || !paths.user_error.exists() {
        return Ok(None);
    }
    Ok(Some(formats::read_ground_truth(paths, &data.users, &data.objects)?))
}

/// Runs one algorithm on the dataset in `options.input`. Metrics are computed
/// only when both ground-truth files are present. Non-convergence is reported,
/// not treated as an error.
pub fn run(options: &RunOptions) -> Result<RunReport> {
    options.algorithm.validate()?;
    let paths = DatasetPaths::in_dir(&options.input);
    let data = formats::read_ratings_file(&paths.ratings, options.scale)?;
    let truth = load_truth(&paths, &data)?;
    create_dir(&options.out)?;

    let scale: RatingScale = data.dataset.scale();
    let result = coderank::run_algorithm(&data.dataset, &options.algorithm)?;
    let metrics = truth
        .map(|truth| -> Result<MetricsSection> {
            Ok(MetricsSection {
                relevant_fraction: options.relevant_fraction,
                report: coderank::evaluate_with(&result, &truth, scale, options.relevant_fraction)?,
            })
        })
        .transpose()?;

    formats::write_values_file(
        &options.out.join(QUALITY_FILE),
        "object_id\tq",
        &data.objects,
        &result.quality,
    )?;
    formats::write_values_file(
        &options.out.join(WEIGHTS_FILE),
        "user_id\tw",
        &data.users,
        &result.weights,
    )?;

    let report = RunReport {
        input: options.input.clone(),
        algorithm: options.algorithm,
        label: options.algorithm.label(),
        scale: ScaleReport {
            r_max: scale.r_max(),
            mode: scale.mode(),
        },
        num_users: data.dataset.num_users(),
        num_objects: data.dataset.num_objects(),
        num_ratings: data.dataset.num_ratings(),
        converged: result.converged,
        iterations_used: result.iterations_used,
        final_delta: result.final_delta,
        metrics,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_text(&options.out.join(REPORT_FILE), &text)?;
    Ok(report)
}

/// Runs the sweep described by the config, writing the manifest first and
/// then `sweep.csv`, flushed after every grid point.
pub fn sweep(config_path: &Path, out: &Path, overrides: Overrides) -> Result<PathBuf> {
    let name = config_path.display().to_string();
    let file = ConfigFile::load(config_path)?;
    let spec = file.experiment(&name, &overrides)?;
    create_dir(out)?;

    let manifest = RunManifest::new(
        "sweep",
        Some(config_path),
        out,
        overrides,
        ConfigFile::from_experiment(spec.clone()),
    );
    write_text(&out.join(MANIFEST_FILE), &manifest.to_json())?;

    let csv_path = out.join(SWEEP_FILE);
    let sink = fs::File::create(&csv_path).with_context(|| format!("cannot write {}", csv_path.display()))?;
    let mut writer =
        SweepCsvWriter::new(BufWriter::new(sink)).with_context(|| format!("cannot write {}", csv_path.display()))?;
    coderank::experiments::run_sweep_with::<f64, _>(&spec, overrides.workers.unwrap_or(0), |rows| {
        let rows: Vec<SweepCsvRow> = rows.iter().map(SweepCsvRow::from).collect();
        writer
            .write_rows(&rows)
            .map_err(|e| coderank::Error::Sink(e.to_string()))
    })
    .with_context(|| {
        format!(
            "sweep failed; rows of completed grid points are in {}",
            csv_path.display()
        )
    })?;
    writer
        .into_inner()
        .map_err(anyhow::Error::msg)?
        .flush()
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    Ok(csv_path)
}
