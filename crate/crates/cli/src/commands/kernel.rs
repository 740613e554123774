use num_traits::{Signed, ToPrimitive};
use serde_json::{json, Value};
use ushape_core::decimal::format_f64;
use ushape_core::exact_kernel::{last_row_profile, KernelRow, RowValues};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{csv_bytes, emit, json_bytes};

/// Largest entrywise gap between any two rows; exact when both are rational.
pub fn max_abs_disagreement(rows: &[KernelRow]) -> f64 {
    let mut worst = 0.0f64;
    for (k, a) in rows.iter().enumerate() {
        for b in &rows[k + 1..] {
            let gap = match (&a.values, &b.values) {
                (RowValues::Exact(x), RowValues::Exact(y)) => x
                    .iter()
                    .zip(y)
                    .map(|(p, q)| (p - q).abs().to_f64().unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max),
                _ => a.to_f64().iter().zip(b.to_f64()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max),
            };
            worst = worst.max(gap);
        }
    }
    worst
}

fn cells(row: &KernelRow, digits: usize) -> Vec<String> {
    match &row.values {
        RowValues::Exact(_) => row.decimal_strings(digits),
        RowValues::Float(v) => v.iter().map(|&x| format_f64(x)).collect(),
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let alpha = cfg.alpha_or("1/2")?;
    let methods = cfg.methods()?;
    let (limits, quad) = (cfg.limits(), cfg.quadrature()?);
    let rows = methods
        .iter()
        .map(|&m| last_row_profile(cfg.len, cfg.depth, &alpha, m, &limits, &quad))
        .collect::<Result<Vec<_>, _>>()?;
    let disagreement = (rows.len() > 1).then(|| max_abs_disagreement(&rows));
    if let Some(d) = disagreement {
        eprintln!("max_abs_disagreement = {}", format_f64(d));
    }
    let bytes = match cfg.format {
        Format::Json => {
            let doc: Value = if rows.len() == 1 {
                rows[0].to_json(cfg.digits)
            } else {
                json!({
                    "L": cfg.len,
                    "H": cfg.depth,
                    "alpha": alpha,
                    "rows": rows.iter().map(|r| r.to_json(cfg.digits)).collect::<Vec<_>>(),
                    "max_abs_disagreement": disagreement,
                })
            };
            json_bytes(&doc)?
        }
        Format::Csv => {
            let names: Vec<&str> = methods.iter().map(|m| m.as_str()).collect();
            let mut header = vec!["position", "x"];
            header.extend(&names);
            let columns: Vec<Vec<String>> = rows.iter().map(|r| cells(r, cfg.digits)).collect();
            let len = cfg.len;
            csv_bytes(
                &header,
                (0..len).map(|j| {
                    let mut rec = vec![(j + 1).to_string(), format_f64((j + 1) as f64 / len as f64)];
                    rec.extend(columns.iter().map(|c| c[j].clone()));
                    rec
                }),
            )?
        }
    };
    emit(cfg.out.as_deref(), &bytes)
}
