use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use ushape_core::metrics::{normalize_to_distribution, peak_to_trough, position_grid, spearman, wasserstein1};
use ushape_core::Error;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{emit, json_bytes};

pub const DEFAULT_MIN_SPEARMAN: f64 = 0.95;
pub const DEFAULT_MAX_WASSERSTEIN: f64 = 0.05;
const METRICS: [&str; 3] = ["spearman", "wasserstein", "peak-to-trough"];
const VALUE_KEYS: [&str; 4] = ["mean", "value", "values", "density"];
const NON_VALUE_COLUMNS: [&str; 9] =
    ["position", "x", "p16", "p84", "theory", "is_point_mass", "point_mass_weight", "log10_density", "clamped"];

/// A per-position profile read from a CSV or JSON artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileData {
    pub grid: Option<Vec<f64>>,
    pub values: Vec<f64>,
    pub point_mass: f64,
}

fn number(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("{what}: not a number: {s:?}")))
}

fn json_number(v: &Value, what: &str) -> Result<f64, CliError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| CliError::Usage(format!("{what}: bad number"))),
        Value::String(s) => number(s, what),
        _ => Err(CliError::Usage(format!("{what}: expected a number"))),
    }
}

fn json_numbers(v: &Value, what: &str) -> Result<Vec<f64>, CliError> {
    v.as_array()
        .ok_or_else(|| CliError::Usage(format!("{what}: expected an array")))?
        .iter()
        .map(|x| json_number(x, what))
        .collect()
}

fn read_csv(path: &Path, column: Option<&str>) -> Result<ProfileData, CliError> {
    let what = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let col = match column {
        Some(c) => find(c).ok_or_else(|| CliError::Usage(format!("{what}: no column {c:?}")))?,
        None => VALUE_KEYS
            .iter()
            .find_map(|k| find(k))
            .or_else(|| (0..headers.len()).rev().find(|&i| !NON_VALUE_COLUMNS.contains(&&headers[i])))
            .ok_or_else(|| CliError::Usage(format!("{what}: no value column")))?,
    };
    let (x_col, pm_flag, pm_weight) = (find("x"), find("is_point_mass"), find("point_mass_weight"));
    let mut data = ProfileData { grid: x_col.map(|_| Vec::new()), values: Vec::new(), point_mass: 0.0 };
    for rec in rdr.records() {
        let rec = rec?;
        let cell = |i: usize| rec.get(i).unwrap_or("");
        if pm_flag.is_some_and(|i| cell(i).trim() == "1") {
            data.point_mass += pm_weight.map_or(Ok(0.0), |i| number(cell(i), &what))?;
            continue;
        }
        data.values.push(number(cell(col), &what)?);
        if let (Some(g), Some(i)) = (data.grid.as_mut(), x_col) {
            g.push(number(cell(i), &what)?);
        }
    }
    Ok(data)
}

fn read_json(path: &Path, column: Option<&str>) -> Result<ProfileData, CliError> {
    let what = path.display().to_string();
    let doc: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let point_mass = doc.get("point_mass_at_one").map_or(Ok(0.0), |v| json_number(v, &what))?;
    let grid = doc.get("x").map(|v| json_numbers(v, &what)).transpose()?;
    let keys: Vec<&str> = match column {
        Some(c) => vec![c],
        None => vec!["mean", "row_last", "values"],
    };
    if let Some(v) = keys.iter().find_map(|k| doc.get(*k)) {
        return Ok(ProfileData { grid, values: json_numbers(v, &what)?, point_mass });
    }
    // Multi-method kernel documents and density documents both carry `rows`.
    let rows = doc
        .get("rows")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Usage(format!("{what}: no profile values found")))?;
    if let Some(first) = rows.first().and_then(|r| r.get("row_last")) {
        return Ok(ProfileData { grid: None, values: json_numbers(first, &what)?, point_mass });
    }
    let mut data = ProfileData { grid: Some(Vec::new()), values: Vec::new(), point_mass: 0.0 };
    for r in rows {
        if r.get("is_point_mass").and_then(Value::as_bool) == Some(true) {
            data.point_mass += r.get("point_mass_weight").map_or(Ok(0.0), |v| json_number(v, &what))?;
            continue;
        }
        let field = |k: &str| r.get(k).ok_or_else(|| CliError::Usage(format!("{what}: row without {k}")));
        data.values.push(json_number(field("density")?, &what)?);
        data.grid.as_mut().unwrap().push(json_number(field("x")?, &what)?);
    }
    Ok(data)
}

pub fn read_profile(path: &Path, column: Option<&str>) -> Result<ProfileData, CliError> {
    if !path.exists() {
        return Err(CliError::Io(format!("{}: no such file", path.display())));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json(path, column),
        _ => read_csv(path, column),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateOutcome {
    pub passed: bool,
    pub min_spearman: Option<f64>,
    pub max_wasserstein: Option<f64>,
    pub violations: Vec<String>,
}

/// Fit report; a metric is `null` when it was not selected or is undefined
/// for the inputs (e.g. Spearman against a constant profile).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub spearman: Option<f64>,
    pub wasserstein1: Option<f64>,
    pub peak_to_trough_log10: Option<f64>,
    pub n_positions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateOutcome>,
}

fn tolerate_undefined(r: Result<f64, Error>) -> Result<Option<f64>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::UndefinedCorrelation(_) | Error::Domain(_) | Error::InvalidParameter(_))) => {
            log::warn!("{e}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn report(a: &ProfileData, b: &ProfileData, cfg: &RunConfig) -> Result<CompareReport, CliError> {
    let selected: Vec<&str> = if cfg.metric.is_empty() {
        METRICS.to_vec()
    } else {
        cfg.metric.iter().map(String::as_str).collect()
    };
    if let Some(bad) = selected.iter().find(|m| !METRICS.contains(m)) {
        return Err(CliError::Usage(format!("unknown compare metric {bad:?}; expected one of {METRICS:?}")));
    }
    let n = a.values.len();
    if b.values.len() != n {
        return Err(Error::GridMismatch(format!("profiles have {n} and {} positions", b.values.len())).into());
    }
    let min_spearman = cfg.gate_spearman.or(cfg.gate.then_some(DEFAULT_MIN_SPEARMAN));
    let max_wasserstein = cfg.gate_wasserstein.or(cfg.gate.then_some(DEFAULT_MAX_WASSERSTEIN));
    let want = |m: &str| selected.contains(&m);

    let rho = if want("spearman") || min_spearman.is_some() {
        tolerate_undefined(spearman(&a.values, &b.values))?
    } else {
        None
    };
    let w1 = if want("wasserstein") || max_wasserstein.is_some() {
        let grid_a = a.grid.clone().unwrap_or_else(|| position_grid(n));
        let grid_b = b.grid.clone().unwrap_or_else(|| position_grid(n));
        let p = normalize_to_distribution(&grid_a, &a.values, a.point_mass)?;
        let q = normalize_to_distribution(&grid_b, &b.values, b.point_mass)?;
        Some(wasserstein1(&p, &q)?)
    } else {
        None
    };
    let ptt = if want("peak-to-trough") { tolerate_undefined(peak_to_trough(&a.values, 1))? } else { None };

    let gate = (min_spearman.is_some() || max_wasserstein.is_some()).then(|| {
        let mut violations = Vec::new();
        if let Some(t) = min_spearman {
            match rho {
                Some(r) if r >= t => {}
                Some(r) => violations.push(format!("spearman {r} < {t}")),
                None => violations.push(format!("spearman undefined, required >= {t}")),
            }
        }
        if let (Some(t), Some(w)) = (max_wasserstein, w1) {
            if w.is_nan() || w > t {
                violations.push(format!("wasserstein1 {w} > {t}"));
            }
        }
        GateOutcome { passed: violations.is_empty(), min_spearman, max_wasserstein, violations }
    });
    Ok(CompareReport { spearman: rho, wasserstein1: w1, peak_to_trough_log10: ptt, n_positions: n, gate })
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let [a, b] = cfg.inputs.as_slice() else {
        return Err(CliError::Usage(format!("compare needs exactly two input files, got {}", cfg.inputs.len())));
    };
    let column = cfg.column.as_deref();
    let rep = report(&read_profile(a, column)?, &read_profile(b, column)?, cfg)?;
    emit(cfg.out.as_deref(), &json_bytes(&rep)?)?;
    match rep.gate {
        Some(g) if !g.passed => Err(CliError::Gate(g.violations)),
        _ => Ok(()),
    }
}
