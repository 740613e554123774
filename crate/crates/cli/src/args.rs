//! Command-line flags and their conversion into a config overlay.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use toml::{Table, Value};
use ushape_core::exact_kernel::Method;
use ushape_core::quadrature::QuadRule;
use ushape_core::toy::AttentionMode;

use crate::config::{parse_f64_list, split_list, Command, Format, GridSpec, Toggle};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ushape", version, about = "Influence kernels of causal attention stacks at initialization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Last row of the discrete kernel power by one or more methods.
    Kernel(Flags),
    /// Continuous influence density on a grid, with its point mass.
    Density(Flags),
    /// Seed ensemble of toy-model Jacobian profiles.
    Simulate(Flags),
    /// Fit report between two profile files.
    Compare(Flags),
    /// Metrics over a cartesian grid of parameters, in long format.
    Sweep(Flags),
}

impl Sub {
    pub fn split(self) -> (Command, Flags) {
        match self {
            Sub::Kernel(f) => (Command::Kernel, f),
            Sub::Density(f) => (Command::Density, f),
            Sub::Simulate(f) => (Command::Simulate, f),
            Sub::Compare(f) => (Command::Compare, f),
            Sub::Sweep(f) => (Command::Sweep, f),
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Flat TOML file whose keys mirror these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    pub dump_config: bool,

    /// Profile files (compare).
    pub inputs: Vec<PathBuf>,

    /// Sequence length.
    #[arg(long = "L")]
    pub len: Option<usize>,
    /// Depth (kernel power / number of layers).
    #[arg(long = "H")]
    pub depth: Option<u32>,
    /// Mixing weight: `p/q`, integer or decimal (exact), or float syntax.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Comma list of exact, float-power, closed-form, integral.
    #[arg(long)]
    pub method: Option<String>,
    /// Point count for a uniform grid, or a comma list of x values.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
    /// Model width.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    /// Query/key width per head.
    #[arg(long)]
    pub dk: Option<usize>,
    #[arg(long, value_enum)]
    pub rope: Option<Toggle>,
    #[arg(long)]
    pub rope_theta: Option<f64>,
    /// uniform-linear or softmax-random.
    #[arg(long)]
    pub attention: Option<String>,
    /// kaiming or scalar:<gamma>.
    #[arg(long)]
    pub init: Option<String>,
    /// ones or random:<seed>.
    #[arg(long)]
    pub probe: Option<String>,
    /// Divide attention scores by sqrt(d_k).
    #[arg(long)]
    pub score_temperature: bool,
    /// Comma list of metric names.
    #[arg(long)]
    pub metric: Option<String>,
    /// Fail with a gate exit status when a threshold is violated.
    #[arg(long)]
    pub gate: bool,
    #[arg(long)]
    pub gate_spearman: Option<f64>,
    #[arg(long)]
    pub gate_wasserstein: Option<f64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Significant digits for exact values in CSV and JSON.
    #[arg(long)]
    pub digits: Option<usize>,
    #[arg(long = "exact-max-L")]
    pub exact_max_l: Option<usize>,
    #[arg(long = "closed-form-max-L")]
    pub closed_form_max_l: Option<usize>,
    #[arg(long = "float-max-L")]
    pub float_max_l: Option<usize>,
    #[arg(long = "integral-max-L")]
    pub integral_max_l: Option<usize>,
    /// auto, gauss-laguerre, windowed-legendre or gauss-legendre.
    #[arg(long)]
    pub quad: Option<String>,
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    #[arg(long)]
    pub quad_tol: Option<f64>,
    #[arg(long)]
    pub quad_max_nodes: Option<usize>,
    /// Add a clamped log10 column to density output.
    #[arg(long)]
    pub log_floor: Option<f64>,
    /// Add the float-power kernel row as a theory column.
    #[arg(long)]
    pub theory: bool,
    /// Write per-seed profiles as JSON keyed by seed.
    #[arg(long)]
    pub raw_out: Option<PathBuf>,
    /// Value column or key to read in compare.
    #[arg(long)]
    pub column: Option<String>,
    /// Comma list of x positions for convergence metrics.
    #[arg(long)]
    pub x: Option<String>,
    /// Sweep ranges: `a,b,c`, `a..b` or `a..=b`.
    #[arg(long = "sweep-L")]
    pub sweep_len: Option<String>,
    #[arg(long = "sweep-H")]
    pub sweep_depth: Option<String>,
    #[arg(long)]
    pub sweep_alpha: Option<String>,
    #[arg(long)]
    pub sweep_dk: Option<String>,
    #[arg(long)]
    pub sweep_heads: Option<String>,
    /// Largest number of sweep points accepted.
    #[arg(long)]
    pub max_points: Option<usize>,
}

fn value<T: Serialize>(v: T) -> Result<Value, CliError> {
    Value::try_from(v).map_err(|e| CliError::Usage(e.to_string()))
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn int(n: impl TryInto<i64>) -> Result<Value, CliError> {
    n.try_into().map(Value::Integer).map_err(|_| CliError::Usage("integer flag out of range".into()))
}

impl Flags {
    /// Keys for every flag given explicitly.
    pub fn overlay(&self, command: Command) -> Result<Table, CliError> {
        let mut t = Table::new();
        let mut put = |k: &str, v: Value| {
            t.insert(k.to_string(), v);
        };
        put("command", value(command)?);
        if !self.inputs.is_empty() {
            put("inputs", value(&self.inputs)?);
        }
        for (k, v) in [
            ("L", self.len),
            ("seeds", self.seeds),
            ("d", self.d),
            ("heads", self.heads),
            ("dk", self.dk),
            ("digits", self.digits),
            ("exact-max-L", self.exact_max_l),
            ("closed-form-max-L", self.closed_form_max_l),
            ("float-max-L", self.float_max_l),
            ("integral-max-L", self.integral_max_l),
            ("quad-nodes", self.quad_nodes),
            ("quad-max-nodes", self.quad_max_nodes),
            ("max-points", self.max_points),
        ] {
            if let Some(v) = v {
                put(k, int(v)?);
            }
        }
        if let Some(v) = self.depth {
            put("H", int(v)?);
        }
        if let Some(v) = self.base_seed {
            put("base-seed", int(v)?);
        }
        for (k, v) in [
            ("rope-theta", self.rope_theta),
            ("gate-spearman", self.gate_spearman),
            ("gate-wasserstein", self.gate_wasserstein),
            ("quad-tol", self.quad_tol),
            ("log-floor", self.log_floor),
        ] {
            if let Some(v) = v {
                put(k, Value::Float(v));
            }
        }
        for (k, v) in [
            ("alpha", &self.alpha),
            ("init", &self.init),
            ("probe", &self.probe),
            ("column", &self.column),
            ("sweep-L", &self.sweep_len),
            ("sweep-H", &self.sweep_depth),
            ("sweep-alpha", &self.sweep_alpha),
            ("sweep-dk", &self.sweep_dk),
            ("sweep-heads", &self.sweep_heads),
        ] {
            if let Some(v) = v {
                put(k, Value::String(v.clone()));
            }
        }
        for (k, v) in [("out", &self.out), ("raw-out", &self.raw_out)] {
            if let Some(v) = v {
                put(k, value(v)?);
            }
        }
        for (k, on) in [("gate", self.gate), ("theory", self.theory), ("score-temperature", self.score_temperature)] {
            if on {
                put(k, Value::Boolean(true));
            }
        }
        if let Some(v) = self.rope {
            put("rope", value(v)?);
        }
        if let Some(v) = self.format {
            put("format", value(v)?);
        }
        if let Some(s) = &self.method {
            let methods = split_list(s).map(str::parse::<Method>).collect::<Result<Vec<_>, _>>().map_err(usage)?;
            put("method", value(methods)?);
        }
        if let Some(s) = &self.attention {
            put("attention", value(s.parse::<AttentionMode>().map_err(usage)?)?);
        }
        if let Some(s) = &self.quad {
            put("quad", value(s.parse::<QuadRule>().map_err(usage)?)?);
        }
        if let Some(s) = &self.grid {
            put("grid", value(GridSpec::parse(s)?)?);
        }
        if let Some(s) = &self.metric {
            put("metric", value(split_list(s).collect::<Vec<_>>())?);
        }
        if let Some(s) = &self.x {
            put("x", value(parse_f64_list(s)?)?);
        }
        Ok(t)
    }
}
