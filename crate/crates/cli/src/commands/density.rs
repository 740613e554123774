use serde_json::json;
use ushape_core::continuous::{density_grid, uniform_grid, write_density_csv, ContinuousProfile};

use crate::config::{Format, GridSpec, RunConfig};
use crate::error::CliError;
use crate::output::{emit, json_bytes};

pub fn grid_points(grid: Option<&GridSpec>, fallback: usize) -> Result<Vec<f64>, CliError> {
    let pts = match grid {
        None => uniform_grid(fallback),
        Some(GridSpec::Count(n)) => uniform_grid(*n),
        Some(GridSpec::Points(v)) => v.clone(),
    };
    if pts.is_empty() {
        return Err(CliError::Usage("grid has no points".into()));
    }
    Ok(pts)
}

/// Alpha defaults to 1 here, the pure causal density.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let alpha = cfg.alpha_or("1")?.to_f64();
    let profile = ContinuousProfile::new(cfg.depth, alpha)?;
    let rows = density_grid(&profile, &grid_points(cfg.grid.as_ref(), cfg.len)?)?;
    let bytes = match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_density_csv(&mut buf, &rows, cfg.log_floor)?;
            buf
        }
        Format::Json => json_bytes(&json!({
            "H": cfg.depth,
            "alpha": alpha,
            "point_mass_at_one": profile.point_mass_at_one,
            "rows": rows,
        }))?,
    };
    emit(cfg.out.as_deref(), &bytes)
}
