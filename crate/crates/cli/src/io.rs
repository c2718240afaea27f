//! File formats: numeric CSV input with header autodetection, group layout
//! and scenario JSON, the fit-result JSON document, and shortest round-trip
//! float formatting for byte-stable CSV output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dsiht::groups::GroupSpec;
use dsiht::matrix::Matrix;
use dsiht::simulate::{ExperimentScenario, SignalKind};

use crate::error::{CliError, CliResult};

/// Shortest decimal representation that parses back to the same value.
/// Rust's default float display already guarantees this.
pub fn format_float(x: f64) -> String {
    format!("{}", x)
}

/// Read a CSV file into numeric rows. The first row may be a header: if any
/// of its fields fails to parse as a number the row is skipped, otherwise it
/// is data. Later non-numeric fields are errors with file/line diagnostics.
fn read_numeric_rows(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::validation(format!("{}: {}", path.display(), e)))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::validation(format!("{}: {}", path.display(), e)))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(idx as u64 + 1);
        let mut row = Vec::with_capacity(record.len());
        let mut bad_field: Option<&str> = None;
        for field in record.iter() {
            match field.parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    bad_field = Some(field);
                    break;
                }
            }
        }
        match bad_field {
            None => rows.push(row),
            Some(_) if idx == 0 => {} // header row
            Some(field) => {
                return Err(CliError::validation(format!(
                    "{} line {}: '{}' is not a number",
                    path.display(),
                    line,
                    field
                )));
            }
        }
    }
    Ok(rows)
}

/// Read a design matrix: one observation per CSV row.
pub fn read_matrix_csv(path: &Path) -> CliResult<Matrix> {
    let rows = read_numeric_rows(path)?;
    if rows.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(Matrix::from_rows(&rows)?)
}

/// Read one column of a CSV file as a vector.
pub fn read_vector_csv(path: &Path, col: usize) -> CliResult<Vec<f64>> {
    let rows = read_numeric_rows(path)?;
    if rows.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let width = rows[0].len();
    if col >= width {
        return Err(CliError::validation(format!(
            "{}: column {} requested but the file has {} columns",
            path.display(),
            col,
            width
        )));
    }
    Ok(rows.iter().map(|row| row[col]).collect())
}

/// Read a group layout JSON file.
pub fn read_groups_json(path: &Path) -> CliResult<GroupSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {}", path.display(), e)))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {}", path.display(), e)))
}

fn default_rho() -> f64 {
    0.5
}

/// A scenario file: the simulation parameters plus an optional label used in
/// the output CSV. Unknown fields are rejected so typos fail loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    /// Label for the scenario column of the metrics CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub s: usize,
    pub s0: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub snr: f64,
    pub signal: SignalKind,
    pub replications: usize,
    pub base_seed: u64,
}

impl ScenarioDoc {
    /// The core scenario these parameters describe.
    pub fn to_scenario(&self) -> ExperimentScenario {
        ExperimentScenario {
            n: self.n,
            m: self.m,
            d: self.d,
            s: self.s,
            s0: self.s0,
            rho: self.rho,
            snr: self.snr,
            signal: self.signal,
            replications: self.replications,
            base_seed: self.base_seed,
        }
    }

    /// Label for output rows.
    pub fn label(&self) -> String {
        self.id.clone().unwrap_or_else(|| "scenario".to_string())
    }
}

/// Read and validate a scenario file.
pub fn read_scenario_json(path: &Path) -> CliResult<ScenarioDoc> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {}", path.display(), e)))?;
    let doc: ScenarioDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {}", path.display(), e)))?;
    doc.to_scenario().validate()?;
    Ok(doc)
}

/// One grid candidate's row in the fit document's criterion table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcRow {
    /// Candidate within-group sparsity level.
    pub s0: usize,
    /// Criterion value; null encodes a non-finite value (an interpolating
    /// fit under the extended BIC).
    pub value: Option<f64>,
    /// Nonzero count of the candidate's fit.
    pub support_size: usize,
    /// Active-group count of the candidate's fit.
    pub group_support_size: usize,
    /// Iterate index the candidate's pass selected.
    pub selected_iteration: usize,
    /// Noise proxy from the candidate's phase boundary.
    pub sigma_bar: f64,
    /// Residual sum of squares of the candidate's fit.
    pub rss: f64,
    /// True when the fit has zero residual.
    pub interpolating: bool,
}

/// The criterion table over the `s0` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcTable {
    /// Which criterion ranked the candidates ("sgc" or "ebic").
    pub kind: String,
    /// One row per candidate, ascending `s0`.
    pub rows: Vec<IcRow>,
}

/// The JSON document a fit emits. Reading it back and re-serializing
/// reproduces the file byte-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    /// Dense coefficients on the original column scale and order.
    pub coefficients: Vec<f64>,
    /// Intercept on the original scale; present iff centering was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    /// Nonzero columns (original indices, ascending).
    pub support: Vec<usize>,
    /// Active groups (original labels, ascending).
    pub group_support: Vec<usize>,
    /// Within-group sparsity level the sweep selected.
    pub s0_selected: usize,
    /// Noise proxy of the winning pass.
    pub sigma_bar: f64,
    /// Criterion table over the grid.
    pub ic: IcTable,
    /// True when a least-squares refit needed a ridge fallback.
    pub ridged: bool,
    /// True when the iteration cap stopped a schedule early.
    pub truncated: bool,
    /// Remarks, e.g. "degenerate response".
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Serialize a fit document exactly as the fit command writes it.
pub fn render_fit_document(doc: &FitDocument) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::numerical(format!("serializing fit document: {}", e)))?;
    text.push('\n');
    Ok(text)
}

/// Append one CSV line of already-formatted fields.
pub fn push_csv_row(out: &mut String, fields: &[String]) {
    let _ = writeln!(out, "{}", fields.join(","));
}

/// Write text to a file, or to stdout when no path is given.
pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::numerical(format!("writing {}: {}", p.display(), e))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::numerical(format!("writing stdout: {}", e)))
        }
    }
}
