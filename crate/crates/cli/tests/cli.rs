use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use coderank::{AlgorithmConfig, AlgorithmKind};
use coderank_cli::commands::{self, RunOptions};
use coderank_cli::config::Overrides;
use coderank_cli::formats::{self, DatasetPaths, ScaleSpec};

fn coderank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coderank"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const FULL_SCALE_GENERATOR: &str = "[generator]\nnum_users = 1000\nnum_objects = 1000\nsparsity = 0.1\nsigma_max = 1.0\nmode = \"discrete\"\nseed = 2\n";

#[test]
fn generate_writes_exactly_the_requested_ratings() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "gen.toml", FULL_SCALE_GENERATOR);
    let out = dir.path().join("data");
    let o = coderank(&["generate", "--config", s(&config), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stderr.is_empty());
    let text = fs::read_to_string(out.join("ratings.tsv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 100_000);
    assert!(out.join("manifest.json").exists());
    assert!(out.join("true_quality.tsv").exists());
    assert!(out.join("user_error.tsv").exists());
}

#[test]
fn regenerating_from_the_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "gen.toml",
        "[generator]\nnum_users = 50\nnum_objects = 40\nsparsity = 0.3\nsigma_min = 0.2\nsigma_max = 1.5\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(coderank(&[
        "generate",
        "--config",
        s(&config),
        "--out",
        s(&a),
        "--seed",
        "11",
        "--mode",
        "discrete"
    ])
    .status
    .success());
    let manifest = a.join("manifest.json");
    assert!(coderank(&["generate", "--config", s(&manifest), "--out", s(&b)])
        .status
        .success());
    for file in ["ratings.tsv", "true_quality.tsv", "user_error.tsv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    assert!(fs::read_to_string(a.join("ratings.tsv"))
        .unwrap()
        .starts_with("# scale r_max=5 mode=discrete\n"));
}

#[test]
fn sparsity_out_of_range_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "gen.toml",
        "[generator]\nnum_users = 5\nnum_objects = 5\nsparsity = 1.2\n",
    );
    let o = coderank(&["generate", "--config", s(&config), "--out", s(&dir.path().join("x"))]);
    assert!(!o.status.success());
    assert!(o.stdout.is_empty());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sparsity"), "{err}");
}

#[test]
fn unknown_config_keys_report_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "gen.toml",
        "[generator]\nnum_users = 5\nnum_objects = 5\nsigma = 1.0\n",
    );
    let o = coderank(&["generate", "--config", s(&config), "--out", s(&dir.path().join("x"))]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(!o.status.success());
    assert!(err.contains("line 4") && err.contains("sigma"), "{err}");
}

fn generated(dir: &Path, extra: &str) -> std::path::PathBuf {
    let config = write(
        dir,
        "gen.toml",
        &format!("[generator]\nnum_users = 60\nnum_objects = 50\nsparsity = 0.2\nseed = 4\n{extra}"),
    );
    let out = dir.join("data");
    commands::generate(&config, &out, Overrides::default()).unwrap();
    out
}

#[test]
fn aa_quality_is_the_plain_mean_per_object() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), "");
    let out = dir.path().join("aa");
    let o = coderank(&["run", "--input", s(&data), "--out", s(&out), "--algorithm", "aa"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let ratings = formats::read_ratings_file(&data.join("ratings.tsv"), ScaleSpec::default()).unwrap();
    let estimates = formats::read_values_file(&out.join("estimated_quality.tsv")).unwrap();
    assert_eq!(estimates.len(), ratings.dataset.num_objects());
    for (id, q) in estimates {
        let o = ratings.objects.get(&id).unwrap();
        let (_, values) = ratings.dataset.object_column(o);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!((q - mean).abs() <= 1e-12, "object {id}: {q} vs {mean}");
    }
}

#[test]
fn yzlm_without_penalty_reports_the_same_metrics_as_aa() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), "sigma_max = 2.0\n");
    let aa = commands::run(&RunOptions::new(
        &data,
        &dir.path().join("aa"),
        AlgorithmConfig::new(AlgorithmKind::Aa),
    ))
    .unwrap();
    let y = commands::run(&RunOptions::new(
        &data,
        &dir.path().join("y"),
        AlgorithmConfig::new(AlgorithmKind::Yzlm).with_beta(0.0),
    ))
    .unwrap();
    let (a, b) = (aa.metrics.unwrap().report, y.metrics.unwrap().report);
    assert!((a.delta_q - b.delta_q).abs() <= 1e-12);
    assert!((a.auc_objects - b.auc_objects).abs() <= 1e-12);
    assert_eq!(
        fs::read(dir.path().join("aa/estimated_quality.tsv")).unwrap(),
        fs::read(dir.path().join("y/estimated_quality.tsv")).unwrap()
    );
}

#[test]
fn missing_ground_truth_omits_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), "");
    fs::remove_file(data.join("user_error.tsv")).unwrap();
    let out = dir.path().join("r");
    let o = coderank(&["run", "--input", s(&data), "--out", s(&out), "--algorithm", "dkvd"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.get("metrics").is_none());
    assert_eq!(report["converged"], serde_json::Value::Bool(true));
    assert!(out.join("estimated_quality.tsv").exists());
    assert!(out.join("user_weights.tsv").exists());
}

#[test]
fn non_convergence_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), "sigma_max = 2.0\n");
    let out = dir.path().join("r");
    let o = coderank(&[
        "run",
        "--input",
        s(&data),
        "--out",
        s(&out),
        "--algorithm",
        "mizz",
        "--max-iters",
        "1",
        "--delta",
        "1e-15",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(false));
    assert_eq!(report["iterations_used"], 1);
}

#[test]
fn schema_errors_exit_nonzero_with_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad");
    fs::create_dir(&data).unwrap();
    write(
        &data,
        "ratings.tsv",
        "# scale r_max=5 mode=continuous\n0\t0\t3\n0\t1\t9\n",
    );
    let o = coderank(&["run", "--input", s(&data), "--out", s(&dir.path().join("r"))]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ratings.tsv:3:"), "{err}");
}

#[test]
fn dataset_and_truth_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = coderank::GeneratorConfig {
        num_users: 30,
        num_objects: 30,
        sparsity: 1.0,
        sigma_max: 1.3,
        seed: 8,
        ..coderank::GeneratorConfig::default()
    };
    let (dataset, truth) = coderank::synthgen::generate::<f64>(&config).unwrap();
    let labeled = formats::LabeledDataset::numbered(dataset);
    let paths = DatasetPaths::in_dir(dir.path());
    formats::write_ratings_file(&paths.ratings, &labeled).unwrap();
    formats::write_ground_truth(&paths, &labeled.users, &labeled.objects, &truth).unwrap();

    let back = formats::read_ratings_file(&paths.ratings, ScaleSpec::default()).unwrap();
    assert_eq!(back, labeled);
    let truth_back = formats::read_ground_truth(&paths, &back.users, &back.objects).unwrap();
    assert_eq!(truth_back, truth);
}

fn sweep_rows(dir: &Path, toml: &str) -> Vec<formats::SweepCsvRow> {
    let config = write(dir, "sweep.toml", toml);
    let out = dir.join("out");
    let o = coderank(&["sweep", "--config", s(&config), "--out", s(&out), "--realizations", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["realizations"], 2);
    formats::read_sweep_csv(fs::File::open(out.join("sweep.csv")).unwrap(), "sweep.csv").unwrap()
}

const POPULATION: &str = "[population]\nnum_users = 40\nnum_objects = 40\nsparsity = 0.2\nseed = 1\n";

#[test]
fn sigma_sweep_rows_cover_grid_modes_and_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep_rows(
        dir.path(),
        &format!("{POPULATION}\n[sweep]\nkind = \"sigma_max\"\nr_max = 5\n"),
    );
    assert_eq!(rows.len(), 17 * 2 * 4);
    for row in &rows {
        assert_eq!(row.sweep_variable, "sigma_max");
        let aa = row.algorithm == "AA";
        assert_eq!(row.tau_users.is_none(), aa);
        assert_eq!(row.auc_users.is_none(), aa);
        assert_eq!(row.se_auc_users.is_none(), aa);
    }
}

#[test]
fn resolution_sweep_is_discrete_only() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep_rows(
        dir.path(),
        &format!("{POPULATION}\n[sweep]\nkind = \"resolution\"\nsigma_min_rule = \"zero\"\n"),
    );
    assert_eq!(rows.len(), 19 * 4);
    assert!(rows.iter().all(|r| r.mode == "discrete" && r.sweep_variable == "r_max"));
}

#[test]
fn sweep_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep_rows(
        dir.path(),
        &format!("{POPULATION}\n[sweep]\nkind = \"sigma_max\"\nr_max = 5\nsigma_max_grid = [0.0, 1.5]\n"),
    );
    let mut writer = formats::SweepCsvWriter::new(Vec::new()).unwrap();
    writer.write_rows(&rows).unwrap();
    let bytes = writer.into_inner().unwrap();
    assert_eq!(bytes, fs::read(dir.path().join("out/sweep.csv")).unwrap());
    assert_eq!(formats::read_sweep_csv(bytes.as_slice(), "mem").unwrap(), rows);
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.lines().any(|l| l.contains(",AA,") && l.contains(",,")));
}

#[test]
fn sweep_config_errors_are_reported_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "sweep.toml",
        &format!("{POPULATION}\n[sweep]\nkind = \"sigma_max\"\nr_max = 5\nsigma_max_grid = [1.0, 0.5]\n"),
    );
    let out = dir.path().join("out");
    let o = coderank(&["sweep", "--config", s(&config), "--out", s(&out)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma_max_grid"));
    assert!(!out.exists());
}
