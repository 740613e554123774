use rayon::prelude::*;
use ushape_core::continuous::{discretization_error, discretization_error_aligned};
use ushape_core::decimal::format_f64;
use ushape_core::exact_kernel::{last_row_float, Alpha};
use ushape_core::metrics::{normalize_profile, peak_to_trough, spearman, wasserstein1};
use ushape_core::toy::ensemble::attention_uniformity;
use ushape_core::toy::{score_value_ratio, simulate, AttentionMode, ToyModelConfig};

use crate::commands::simulate::model_config;
use crate::config::{split_list, RunConfig};
use crate::error::CliError;
use crate::output::{csv_bytes, emit};

pub const METRICS: [&str; 8] = [
    "convergence-error",
    "convergence-error-aligned",
    "peak-to-trough",
    "point-mass",
    "score-value-ratio",
    "spearman",
    "uniformity",
    "wasserstein",
];
const HEADER: [&str; 8] = ["L", "H", "alpha", "dk", "heads", "metric", "x", "value"];

/// `a,b,c`, `a..b` (half-open) or `a..=b`; an empty string is an empty
/// range. Values come back sorted and deduplicated.
pub fn parse_int_range(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("bad range {s:?}; use a,b,c or a..b or a..=b"));
    let int = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    let s = s.trim();
    let mut v: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (int(a)?..=int(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (int(a)?..int(b)?).collect()
    } else {
        split_list(s).map(int).collect::<Result<_, _>>()?
    };
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn axis(range: Option<&str>, base: u64) -> Result<Vec<u64>, CliError> {
    range.map_or(Ok(vec![base]), parse_int_range)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub len: usize,
    pub depth: u32,
    pub alpha_text: String,
    pub alpha: f64,
    pub dk: usize,
    pub heads: usize,
}

/// Cartesian product in canonical (sorted) order.
pub fn points(cfg: &RunConfig) -> Result<Vec<Point>, CliError> {
    let lens = axis(cfg.sweep_len.as_deref(), cfg.len as u64)?;
    let depths = axis(cfg.sweep_depth.as_deref(), cfg.depth as u64)?;
    let dks = axis(cfg.sweep_dk.as_deref(), cfg.dk as u64)?;
    let heads = axis(cfg.sweep_heads.as_deref(), cfg.heads as u64)?;
    let alpha_texts: Vec<String> = match &cfg.sweep_alpha {
        Some(s) => split_list(s).map(str::to_string).collect(),
        None => vec![cfg.alpha.clone().unwrap_or_else(|| "1/2".into())],
    };
    let mut alphas = alpha_texts
        .into_iter()
        .map(|t| {
            let a: Alpha = t.parse()?;
            a.validate()?;
            Ok((a.to_f64(), t))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    alphas.sort_by(|a, b| a.0.total_cmp(&b.0));
    alphas.dedup_by(|a, b| a.0 == b.0);
    let depth = |h: u64| u32::try_from(h).map_err(|_| CliError::Usage(format!("H = {h} is too large")));
    let mut out = Vec::new();
    for &l in &lens {
        for &h in &depths {
            for (a, t) in &alphas {
                for &k in &dks {
                    for &n in &heads {
                        out.push(Point {
                            len: l as usize,
                            depth: depth(h)?,
                            alpha_text: t.clone(),
                            alpha: *a,
                            dk: k as usize,
                            heads: n as usize,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn point_config(cfg: &RunConfig, p: &Point) -> RunConfig {
    RunConfig { len: p.len, depth: p.depth, dk: p.dk, heads: p.heads, ..cfg.clone() }
}

/// `(x, value)` pairs of one metric at one point.
fn evaluate(cfg: &RunConfig, p: &Point, metric: &str) -> Result<Vec<(Option<f64>, f64)>, CliError> {
    let pc = point_config(cfg, p);
    let single = |v: f64| Ok(vec![(None, v)]);
    match metric {
        "convergence-error" | "convergence-error-aligned" => cfg
            .x
            .iter()
            .map(|&x| {
                let e = if metric == "convergence-error" {
                    discretization_error(p.len, p.depth, x)?
                } else {
                    discretization_error_aligned(p.len, p.depth, x)?
                };
                Ok((Some(x), e))
            })
            .collect(),
        "peak-to-trough" => single(peak_to_trough(&last_row_float(p.len, p.depth, p.alpha), 1)?),
        "point-mass" => single((1.0 - p.alpha).powi(p.depth as i32)),
        // Single-layer softmax measurements regardless of the configured depth and mode.
        "score-value-ratio" | "uniformity" => {
            let c = ToyModelConfig {
                depth: 1,
                attention_mode: AttentionMode::SoftmaxRandom,
                ..model_config(&pc, p.alpha)?
            };
            let v = if metric == "uniformity" {
                attention_uniformity(&c, cfg.seeds, cfg.base_seed)?
            } else {
                score_value_ratio(&c, cfg.seeds)?.0
            };
            single(v)
        }
        "spearman" | "wasserstein" => {
            let ens = simulate(&model_config(&pc, p.alpha)?, cfg.seeds, cfg.base_seed, &pc.probe()?)?;
            let theory = last_row_float(p.len, p.depth, p.alpha);
            let v = if metric == "spearman" {
                spearman(&ens.values, &theory)?
            } else {
                wasserstein1(&normalize_profile(&ens.values)?, &normalize_profile(&theory)?)?
            };
            single(v)
        }
        other => Err(CliError::Usage(format!("unknown sweep metric {other:?}; expected one of {METRICS:?}"))),
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let mut metrics: Vec<&str> = cfg.metric.iter().map(String::as_str).collect();
    if metrics.is_empty() {
        return Err(CliError::Usage(format!("sweep needs --metric, one or more of {METRICS:?}")));
    }
    if let Some(bad) = metrics.iter().find(|m| !METRICS.contains(m)) {
        return Err(CliError::Usage(format!("unknown sweep metric {bad:?}; expected one of {METRICS:?}")));
    }
    metrics.sort_unstable();
    metrics.dedup();
    let pts = points(cfg)?;
    if pts.is_empty() {
        return emit(cfg.out.as_deref(), b"");
    }
    let jobs = pts.len() * metrics.len();
    if jobs > cfg.max_points {
        return Err(CliError::Usage(format!(
            "sweep of {jobs} point-metric pairs exceeds max-points = {}",
            cfg.max_points
        )));
    }
    let pairs: Vec<(&Point, &str)> = pts.iter().flat_map(|p| metrics.iter().map(move |m| (p, *m))).collect();
    let results = pairs
        .par_iter()
        .map(|(p, m)| evaluate(cfg, p, m))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = pairs.iter().zip(results).flat_map(|((p, m), vals)| {
        vals.into_iter().map(move |(x, v)| {
            vec![
                p.len.to_string(),
                p.depth.to_string(),
                p.alpha_text.clone(),
                p.dk.to_string(),
                p.heads.to_string(),
                m.to_string(),
                x.map(format_f64).unwrap_or_default(),
                format_f64(v),
            ]
        })
    });
    emit(cfg.out.as_deref(), &csv_bytes(&HEADER, rows)?)
}
