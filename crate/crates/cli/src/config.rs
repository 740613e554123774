//! Flat run configuration shared by every subcommand.
//!
//! Keys mirror the long flag names. A run is resolved by layering the
//! defaults, then an optional TOML file, then the flags given on the
//! command line.

use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};
use ushape_core::exact_kernel::{Alpha, Limits, Method};
use ushape_core::quadrature::{QuadRule, QuadratureConfig};
use ushape_core::toy::{AttentionMode, InitScale, Probe};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Kernel,
    Density,
    Simulate,
    Compare,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Toggle {
    On,
    #[default]
    Off,
}

impl Toggle {
    pub fn is_on(self) -> bool {
        self == Toggle::On
    }
}

/// `grid = 64` (uniform `j/64`) or `grid = [0.1, 0.5]` (explicit points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Count(usize),
    Points(Vec<f64>),
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if let Ok(n) = s.parse::<usize>() {
            return Ok(GridSpec::Count(n));
        }
        parse_f64_list(s).map(GridSpec::Points)
    }
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    split_list(s)
        .map(|t| t.parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: {t:?}"))))
        .collect()
}

pub fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// Accepts alpha written as a TOML string or number and keeps its text.
fn alpha_text<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Str(String),
        Int(i64),
        Num(f64),
    }
    Ok(Option::<Raw>::deserialize(d)?.map(|r| match r {
        Raw::Str(s) => s,
        Raw::Int(n) => n.to_string(),
        Raw::Num(x) => x.to_string(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(rename = "L")]
    pub len: usize,
    #[serde(rename = "H")]
    pub depth: u32,
    /// Kept as text so `1/3` stays exact; each command supplies its own
    /// default when unset.
    #[serde(deserialize_with = "alpha_text")]
    pub alpha: Option<String>,
    pub method: Vec<Method>,
    pub grid: Option<GridSpec>,
    pub seeds: usize,
    pub base_seed: u64,
    pub d: usize,
    pub heads: usize,
    pub dk: usize,
    pub rope: Toggle,
    pub rope_theta: f64,
    pub attention: AttentionMode,
    /// `kaiming` or `scalar:<gamma>`.
    pub init: String,
    /// `ones` or `random:<seed>`.
    pub probe: String,
    pub score_temperature: bool,
    pub metric: Vec<String>,
    pub gate: bool,
    pub gate_spearman: Option<f64>,
    pub gate_wasserstein: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub digits: usize,
    #[serde(rename = "exact-max-L")]
    pub exact_max_l: usize,
    #[serde(rename = "closed-form-max-L")]
    pub closed_form_max_l: usize,
    #[serde(rename = "float-max-L")]
    pub float_max_l: usize,
    #[serde(rename = "integral-max-L")]
    pub integral_max_l: usize,
    pub quad: QuadRule,
    pub quad_nodes: usize,
    pub quad_tol: f64,
    pub quad_max_nodes: usize,
    pub log_floor: Option<f64>,
    pub theory: bool,
    pub raw_out: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub column: Option<String>,
    pub x: Vec<f64>,
    #[serde(rename = "sweep-L")]
    pub sweep_len: Option<String>,
    #[serde(rename = "sweep-H")]
    pub sweep_depth: Option<String>,
    pub sweep_alpha: Option<String>,
    pub sweep_dk: Option<String>,
    pub sweep_heads: Option<String>,
    pub max_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let limits = Limits::default();
        let quad = QuadratureConfig::default();
        RunConfig {
            command: None,
            len: 64,
            depth: 4,
            alpha: None,
            method: vec![Method::Exact],
            grid: None,
            seeds: 32,
            base_seed: 0,
            d: 64,
            heads: 1,
            dk: 16,
            rope: Toggle::Off,
            rope_theta: 10_000.0,
            attention: AttentionMode::UniformLinear,
            init: "kaiming".into(),
            probe: "ones".into(),
            score_temperature: false,
            metric: Vec::new(),
            gate: false,
            gate_spearman: None,
            gate_wasserstein: None,
            out: None,
            format: Format::Csv,
            digits: ushape_core::decimal::DEFAULT_SIGNIFICANT_DIGITS,
            exact_max_l: limits.exact_max_len,
            closed_form_max_l: limits.closed_form_max_len,
            float_max_l: limits.float_max_len,
            integral_max_l: limits.integral_max_len,
            quad: quad.rule,
            quad_nodes: quad.nodes,
            quad_tol: quad.tolerance,
            quad_max_nodes: quad.max_nodes,
            log_floor: None,
            theory: false,
            raw_out: None,
            inputs: Vec::new(),
            column: None,
            x: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            sweep_len: None,
            sweep_depth: None,
            sweep_alpha: None,
            sweep_dk: None,
            sweep_heads: None,
            max_points: 4096,
        }
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Usage(format!("cannot serialize config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    /// Defaults, overlaid by `file` keys, overlaid by `flags` keys.
    pub fn resolve(file: Option<toml::Table>, flags: toml::Table) -> Result<Self, CliError> {
        let mut merged = toml::Table::try_from(RunConfig::default())
            .map_err(|e| CliError::Usage(format!("cannot serialize defaults: {e}")))?;
        for layer in file.into_iter().chain(std::iter::once(flags)) {
            merged.extend(layer);
        }
        toml::Value::Table(merged)
            .try_into()
            .map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn alpha_or(&self, default: &str) -> Result<Alpha, CliError> {
        let a: Alpha = self.alpha.as_deref().unwrap_or(default).parse()?;
        a.validate()?;
        Ok(a)
    }

    pub fn limits(&self) -> Limits {
        Limits {
            exact_max_len: self.exact_max_l,
            closed_form_max_len: self.closed_form_max_l,
            float_max_len: self.float_max_l,
            integral_max_len: self.integral_max_l,
        }
    }

    pub fn quadrature(&self) -> Result<QuadratureConfig, CliError> {
        let q = QuadratureConfig {
            rule: self.quad,
            nodes: self.quad_nodes,
            tolerance: self.quad_tol,
            max_nodes: self.quad_max_nodes,
            ..QuadratureConfig::default()
        };
        q.validate()?;
        Ok(q)
    }

    pub fn init_scale(&self) -> Result<InitScale, CliError> {
        let s = self.init.trim();
        match s.split_once(':') {
            None if s == "kaiming" => Ok(InitScale::Kaiming),
            None if s == "scalar" => Ok(InitScale::ScalarGain { gamma: 1.0 }),
            Some(("scalar", g)) => g
                .trim()
                .parse()
                .map(|gamma| InitScale::ScalarGain { gamma })
                .map_err(|_| CliError::Usage(format!("bad scalar gain in init {s:?}"))),
            _ => Err(CliError::Usage(format!("init must be kaiming or scalar:<gamma>, got {s:?}"))),
        }
    }

    pub fn probe(&self) -> Result<Probe, CliError> {
        let s = self.probe.trim();
        match s.split_once(':') {
            None if s == "ones" => Ok(Probe::Ones),
            Some(("random", seed)) => seed
                .trim()
                .parse()
                .map(|seed| Probe::Random { seed })
                .map_err(|_| CliError::Usage(format!("bad probe seed in {s:?}"))),
            _ => Err(CliError::Usage(format!("probe must be ones or random:<seed>, got {s:?}"))),
        }
    }

    pub fn methods(&self) -> Result<Vec<Method>, CliError> {
        if self.method.is_empty() {
            return Err(CliError::Usage("at least one method is required".into()));
        }
        let mut seen = Vec::new();
        for &m in &self.method {
            if !seen.contains(&m) {
                seen.push(m);
            }
        }
        Ok(seen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn flags_override_file() {
        let file: toml::Table = toml::from_str("L = 8\nH = 2\nalpha = 0.25").unwrap();
        let mut flags = toml::Table::new();
        flags.insert("H".into(), toml::Value::Integer(5));
        let c = RunConfig::resolve(Some(file), flags).unwrap();
        assert_eq!((c.len, c.depth, c.alpha.as_deref()), (8, 5, Some("0.25")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("bogus = 1"), Err(CliError::Usage(_))));
    }

    #[test]
    fn grid_and_init_parsing() {
        assert_eq!(GridSpec::parse("16").unwrap(), GridSpec::Count(16));
        assert_eq!(GridSpec::parse("0.25, 0.5").unwrap(), GridSpec::Points(vec![0.25, 0.5]));
        let c = RunConfig { init: "scalar:2.5".into(), ..Default::default() };
        assert_eq!(c.init_scale().unwrap(), InitScale::ScalarGain { gamma: 2.5 });
        let c = RunConfig { probe: "random:7".into(), ..Default::default() };
        assert_eq!(c.probe().unwrap(), Probe::Random { seed: 7 });
    }
}
