//! Plain-text file formats.
//!
//! Ratings: one `user_id<TAB>object_id<TAB>rating` triple per line. Lines
//! starting with `#` are comments; a `# scale r_max=<R> mode=<mode>` comment
//! records the rating scale. Ground truth is split over two files,
//! `object_id<TAB>Q` and `user_id<TAB>sigma`. Sweep results are CSV with a
//! fixed header and empty fields for absent metrics.
//!
//! Floats are written with Rust's shortest round-trip representation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use coderank::experiments::{MetricSummary, SweepRow};
use coderank::{GroundTruth, RatingDataset, RatingMode, RatingScale};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Dataset {
        path: String,
        #[source]
        source: coderank::Error,
    },
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Maps external string identifiers to dense indices.
///
/// Indices follow the sorted order of the identifiers, numerically when every
/// identifier is a non-negative integer and lexicographically otherwise, so a
/// dataset written with identifiers `0..n` reads back with the same indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolTable {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl SymbolTable {
    pub fn from_names<I: IntoIterator<Item = String>>(names: I) -> Self {
        let mut names: Vec<String> = names.into_iter().collect();
        names.sort();
        names.dedup();
        if names.iter().all(|n| n.parse::<u64>().is_ok()) {
            names.sort_by_key(|n| n.parse::<u64>().unwrap_or(u64::MAX));
        }
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { names, index }
    }

    /// Identifiers `0..n`.
    pub fn numbered(n: usize) -> Self {
        Self::from_names((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }
}

/// A dataset together with the identifiers of its users and objects.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub users: SymbolTable,
    pub objects: SymbolTable,
    pub dataset: RatingDataset,
}

impl LabeledDataset {
    pub fn numbered(dataset: RatingDataset) -> Self {
        Self {
            users: SymbolTable::numbered(dataset.num_users()),
            objects: SymbolTable::numbered(dataset.num_objects()),
            dataset,
        }
    }
}

struct ScaleHeader(RatingScale);

impl fmt::Display for ScaleHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "# scale r_max={} mode={}", self.0.r_max(), self.0.mode())
    }
}

/// Scale fields, each optional; used both for the file header and for
/// command-line overrides of it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScaleSpec {
    pub r_max: Option<u32>,
    pub mode: Option<RatingMode>,
}

impl ScaleSpec {
    /// Fields of `self` take precedence over `fallback`. The mode defaults to continuous.
    pub fn resolve(self, fallback: ScaleSpec) -> std::result::Result<RatingScale, String> {
        let r_max = self
            .r_max
            .or(fallback.r_max)
            .ok_or("rating scale unknown: no `# scale r_max=.. mode=..` header and no r_max given")?;
        let mode = self.mode.or(fallback.mode).unwrap_or(RatingMode::Continuous);
        RatingScale::new(r_max, mode).map_err(|e| e.to_string())
    }
}

impl From<RatingScale> for ScaleSpec {
    fn from(scale: RatingScale) -> Self {
        Self {
            r_max: Some(scale.r_max()),
            mode: Some(scale.mode()),
        }
    }
}

fn parse_scale_header(line: &str) -> Option<std::result::Result<ScaleSpec, String>> {
    let rest = line.strip_prefix('#')?.trim().strip_prefix("scale ")?;
    let mut spec = ScaleSpec::default();
    for field in rest.split_whitespace() {
        let parsed = match field.split_once('=') {
            Some(("r_max", v)) => v
                .parse::<u32>()
                .map(|r| spec.r_max = Some(r))
                .map_err(|e| format!("bad r_max `{v}`: {e}")),
            Some(("mode", v)) => v
                .parse::<RatingMode>()
                .map(|m| spec.mode = Some(m))
                .map_err(|e| e.to_string()),
            _ => Err(format!("unrecognized scale field `{field}`")),
        };
        if let Err(e) = parsed {
            return Some(Err(e));
        }
    }
    Some(Ok(spec))
}

pub fn write_ratings<W: Write>(out: &mut W, data: &LabeledDataset) -> std::io::Result<()> {
    writeln!(out, "{}", ScaleHeader(data.dataset.scale()))?;
    writeln!(out, "# user_id\tobject_id\trating")?;
    for (u, o, r) in data.dataset.triples() {
        writeln!(out, "{}\t{}\t{}", data.users.name(u), data.objects.name(o), r)?;
    }
    Ok(())
}

pub fn write_ratings_file(path: &Path, data: &LabeledDataset) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    write_ratings(&mut out, data).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

fn schema(path: &str, line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Schema {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Tab-separated data lines with their 1-based line numbers; comments and blank lines skipped.
fn data_lines<R: BufRead>(
    input: R,
    path: &str,
    mut on_comment: impl FnMut(usize, &str) -> Result<()>,
) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|source| FormatError::Io {
            path: path.to_string(),
            source,
        })?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.starts_with('#') {
            on_comment(i + 1, trimmed)?;
            continue;
        }
        if trimmed.trim().is_empty() {
            continue;
        }
        rows.push((i + 1, trimmed.split('\t').map(str::to_string).collect()));
    }
    Ok(rows)
}

fn parse_real(path: &str, line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| schema(path, line, format!("{what} `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(schema(path, line, format!("{what} `{field}` is not finite")));
    }
    Ok(v)
}

/// Reads a ratings file. Fields set in `scale` override the file's scale header.
pub fn read_ratings<R: BufRead>(input: R, path: &str, scale: ScaleSpec) -> Result<LabeledDataset> {
    let mut header_scale = ScaleSpec::default();
    let rows = data_lines(input, path, |line, text| {
        if let Some(parsed) = parse_scale_header(text) {
            header_scale = parsed.map_err(|m| schema(path, line, m))?;
        }
        Ok(())
    })?;
    let scale = scale.resolve(header_scale).map_err(|m| schema(path, 1, m))?;

    let mut records = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != 3 {
            return Err(schema(
                path,
                line,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let value = parse_real(path, line, &fields[2], "rating")?;
        let [user, object, _] = <[String; 3]>::try_from(fields).expect("length checked");
        records.push((line, user, object, value));
    }

    let users = SymbolTable::from_names(records.iter().map(|r| r.1.clone()));
    let objects = SymbolTable::from_names(records.iter().map(|r| r.2.clone()));
    let mut seen = std::collections::HashMap::with_capacity(records.len());
    let mut triples = Vec::with_capacity(records.len());
    for (line, user, object, value) in &records {
        let u = users.get(user).expect("symbol registered");
        let o = objects.get(object).expect("symbol registered");
        if let Some(first) = seen.insert((u, o), *line) {
            return Err(schema(
                path,
                *line,
                format!("duplicate rating for user `{user}`, object `{object}` (first on line {first})"),
            ));
        }
        triples.push((u, o, *value));
    }
    // bounds and integrality checked per line so that errors carry line numbers
    for (line, _, _, value) in &records {
        if let Err(e) = RatingDataset::new([(0, 0, *value)], 1, 1, scale) {
            return Err(schema(path, *line, e.to_string()));
        }
    }
    let dataset =
        RatingDataset::new(triples, users.len(), objects.len(), scale).map_err(|source| FormatError::Dataset {
            path: path.to_string(),
            source,
        })?;
    Ok(LabeledDataset {
        users,
        objects,
        dataset,
    })
}

pub fn read_ratings_file(path: &Path, scale: ScaleSpec) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_ratings(std::io::BufReader::new(file), &path.display().to_string(), scale)
}

/// Writes `id<TAB>value` lines under a `#` header.
pub fn write_values<W: Write>(out: &mut W, header: &str, ids: &SymbolTable, values: &[f64]) -> std::io::Result<()> {
    writeln!(out, "# {header}")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{}\t{}", ids.name(i), v)?;
    }
    Ok(())
}

pub fn write_values_file(path: &Path, header: &str, ids: &SymbolTable, values: &[f64]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    write_values(&mut out, header, ids, values).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// Reads `id<TAB>value` lines in file order.
pub fn read_values<R: BufRead>(input: R, path: &str) -> Result<Vec<(String, f64)>> {
    let rows = data_lines(input, path, |_, _| Ok(()))?;
    let mut out = Vec::with_capacity(rows.len());
    let mut seen = std::collections::HashSet::new();
    for (line, fields) in rows {
        if fields.len() != 2 {
            return Err(schema(
                path,
                line,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let v = parse_real(path, line, &fields[1], "value")?;
        if !seen.insert(fields[0].clone()) {
            return Err(schema(path, line, format!("duplicate id `{}`", fields[0])));
        }
        out.push((fields[0].clone(), v));
    }
    Ok(out)
}

pub fn read_values_file(path: &Path) -> Result<Vec<(String, f64)>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_values(std::io::BufReader::new(file), &path.display().to_string())
}

pub const QUALITY_HEADER: &str = "object_id\tQ";
pub const ERROR_HEADER: &str = "user_id\tsigma";

/// Paths of the files that make up a dataset directory.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub ratings: PathBuf,
    pub true_quality: PathBuf,
    pub user_error: PathBuf,
}

impl DatasetPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            ratings: dir.join("ratings.tsv"),
            true_quality: dir.join("true_quality.tsv"),
            user_error: dir.join("user_error.tsv"),
        }
    }
}

pub fn write_ground_truth(
    paths: &DatasetPaths,
    users: &SymbolTable,
    objects: &SymbolTable,
    truth: &GroundTruth,
) -> Result<()> {
    write_values_file(&paths.true_quality, QUALITY_HEADER, objects, &truth.true_quality)?;
    write_values_file(&paths.user_error, ERROR_HEADER, users, &truth.user_error)
}

/// Reads ground truth aligned to the given symbol tables. Entries for
/// identifiers outside the tables (users or objects without ratings) are
/// dropped; every identifier in the tables must be present.
pub fn read_ground_truth(paths: &DatasetPaths, users: &SymbolTable, objects: &SymbolTable) -> Result<GroundTruth> {
    let align = |path: &Path, table: &SymbolTable| -> Result<Vec<f64>> {
        let values = read_values_file(path)?;
        let mut out = vec![f64::NAN; table.len()];
        for (id, v) in values {
            if let Some(i) = table.get(&id) {
                out[i] = v;
            }
        }
        if let Some(i) = out.iter().position(|v| v.is_nan()) {
            return Err(schema(
                &path.display().to_string(),
                0,
                format!("no entry for id `{}`", table.name(i)),
            ));
        }
        Ok(out)
    };
    Ok(GroundTruth {
        true_quality: align(&paths.true_quality, objects)?,
        user_error: align(&paths.user_error, users)?,
    })
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub sweep_variable: String,
    pub value: f64,
    pub mode: String,
    pub algorithm: String,
    pub delta_q: f64,
    pub delta_q_norm: f64,
    pub tau_users: Option<f64>,
    pub auc_objects: f64,
    pub auc_users: Option<f64>,
    pub se_delta_q: f64,
    pub se_delta_q_norm: f64,
    pub se_tau_users: Option<f64>,
    pub se_auc_objects: f64,
    pub se_auc_users: Option<f64>,
    pub n_nonconverged: usize,
}

pub const SWEEP_COLUMNS: [&str; 15] = [
    "sweep_variable",
    "value",
    "mode",
    "algorithm",
    "delta_q",
    "delta_q_norm",
    "tau_users",
    "auc_objects",
    "auc_users",
    "se_delta_q",
    "se_delta_q_norm",
    "se_tau_users",
    "se_auc_objects",
    "se_auc_users",
    "n_nonconverged",
];

impl From<&SweepRow<f64>> for SweepCsvRow {
    fn from(row: &SweepRow<f64>) -> Self {
        let MetricSummary {
            delta_q,
            delta_q_normalized,
            kendall_tau_users,
            auc_objects,
            auc_users,
        } = row.stats.mean;
        let se = row.stats.standard_error;
        Self {
            sweep_variable: row.variable.name().to_string(),
            value: row.value,
            mode: row.mode.name().to_string(),
            algorithm: row.algorithm.clone(),
            delta_q,
            delta_q_norm: delta_q_normalized,
            tau_users: kendall_tau_users,
            auc_objects,
            auc_users,
            se_delta_q: se.delta_q,
            se_delta_q_norm: se.delta_q_normalized,
            se_tau_users: se.kendall_tau_users,
            se_auc_objects: se.auc_objects,
            se_auc_users: se.auc_users,
            n_nonconverged: row.stats.nonconverged,
        }
    }
}

/// Streams sweep rows to a CSV sink, flushing after every batch.
pub struct SweepCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> SweepCsvWriter<W> {
    pub fn new(out: W) -> csv::Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(SWEEP_COLUMNS)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write_rows<'a, I>(&mut self, rows: I) -> csv::Result<()>
    where
        I: IntoIterator<Item = &'a SweepCsvRow>,
    {
        for row in rows {
            self.inner.serialize(row)?;
        }
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> std::result::Result<W, String> {
        self.inner.into_inner().map_err(|e| e.to_string())
    }
}

pub fn read_sweep_csv<R: std::io::Read>(input: R, path: &str) -> Result<Vec<SweepCsvRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(|source| FormatError::Csv {
        path: path.to_string(),
        source,
    })?;
    if header.iter().ne(SWEEP_COLUMNS) {
        return Err(schema(path, 1, "unexpected sweep CSV header"));
    }
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|source| FormatError::Csv {
                path: path.to_string(),
                source,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_table_orders_numbers_numerically() {
        let t = SymbolTable::from_names(["10", "2", "1", "2"].map(String::from));
        assert_eq!(t.len(), 3);
        assert_eq!(t.get("1"), Some(0));
        assert_eq!(t.get("2"), Some(1));
        assert_eq!(t.get("10"), Some(2));
        let t = SymbolTable::from_names(["bob", "alice"].map(String::from));
        assert_eq!(t.name(0), "alice");
    }

    #[test]
    fn scale_header_parses() {
        let s = parse_scale_header("# scale r_max=7 mode=discrete").unwrap().unwrap();
        assert_eq!(
            s.resolve(ScaleSpec::default()),
            RatingScale::new(7, RatingMode::Discrete).map_err(|e| e.to_string())
        );
        assert!(parse_scale_header("# user_id\tobject_id\trating").is_none());
        assert!(parse_scale_header("# scale r_max=x").unwrap().is_err());
        let s = parse_scale_header("# scale r_max=1 mode=discrete").unwrap().unwrap();
        assert!(s.resolve(ScaleSpec::default()).is_err());
    }

    #[test]
    fn ratings_with_string_ids() {
        let text = "# scale r_max=5 mode=continuous\nbob\tbook\t4.5\nalice\tbook\t2\nalice\tcd\t1.25\n";
        let d = read_ratings(text.as_bytes(), "mem", ScaleSpec::default()).unwrap();
        assert_eq!(d.users.name(0), "alice");
        assert_eq!(d.dataset.num_ratings(), 3);
        assert_eq!(d.dataset.object_column(0).1, &[2.0, 4.5]);
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let text = "# scale r_max=5 mode=discrete\n0\t0\t3\n0\t1\t3.5\n";
        let err = read_ratings(text.as_bytes(), "mem", ScaleSpec::default())
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("mem:3:"), "{err}");

        let text = "# scale r_max=5 mode=discrete\n0\t0\t3\n0\t0\t4\n";
        let err = read_ratings(text.as_bytes(), "mem", ScaleSpec::default())
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("mem:3:") && err.contains("duplicate"), "{err}");

        let text = "# scale r_max=5 mode=discrete\n0\t0\n";
        let err = read_ratings(text.as_bytes(), "mem", ScaleSpec::default())
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("mem:2:"), "{err}");

        let text = "0\t0\t3\n";
        assert!(read_ratings(text.as_bytes(), "mem", ScaleSpec::default()).is_err());
        let scale = RatingScale::new(5, RatingMode::Discrete).unwrap().into();
        assert!(read_ratings(text.as_bytes(), "mem", scale).is_ok());
    }

    #[test]
    fn values_reject_duplicates() {
        let err = read_values("a\t1\na\t2\n".as_bytes(), "mem").unwrap_err().to_string();
        assert!(err.starts_with("mem:2:"), "{err}");
    }
}
