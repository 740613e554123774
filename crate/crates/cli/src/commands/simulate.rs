use std::collections::BTreeMap;

use serde_json::json;
use ushape_core::decimal::format_f64;
use ushape_core::exact_kernel::last_row_float;
use ushape_core::metrics::position_grid;
use ushape_core::toy::{simulate, ToyModelConfig};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{csv_bytes, emit, json_bytes};

pub fn model_config(cfg: &RunConfig, alpha: f64) -> Result<ToyModelConfig, CliError> {
    let c = ToyModelConfig {
        len: cfg.len,
        depth: cfg.depth,
        d: cfg.d,
        heads: cfg.heads,
        d_k: cfg.dk,
        alpha,
        rope_enabled: cfg.rope.is_on(),
        rope_theta: cfg.rope_theta,
        attention_mode: cfg.attention,
        seed: cfg.base_seed,
        init_scale: cfg.init_scale()?,
        score_temperature: cfg.score_temperature,
    };
    c.validate()?;
    Ok(c)
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let alpha = cfg.alpha_or("1/2")?.to_f64();
    let model = model_config(cfg, alpha)?;
    let probe = cfg.probe()?;
    let ens = simulate(&model, cfg.seeds, cfg.base_seed, &probe)?;
    let theory = cfg.theory.then(|| last_row_float(cfg.len, cfg.depth, alpha));
    let (p16, p84) = (ens.p16.clone().unwrap_or_default(), ens.p84.clone().unwrap_or_default());
    let x = position_grid(cfg.len);

    if let Some(path) = &cfg.raw_out {
        let members = ens.ensemble.as_deref().unwrap_or_default();
        let by_seed: BTreeMap<u64, &Vec<f64>> =
            members.iter().enumerate().map(|(k, m)| (cfg.base_seed.wrapping_add(k as u64), m)).collect();
        emit(Some(path), &json_bytes(&by_seed)?)?;
    }

    let bytes = match cfg.format {
        Format::Csv => {
            let mut header = vec!["position", "x", "mean", "p16", "p84"];
            if theory.is_some() {
                header.push("theory");
            }
            csv_bytes(
                &header,
                (0..cfg.len).map(|j| {
                    let mut rec = vec![
                        (j + 1).to_string(),
                        format_f64(x[j]),
                        format_f64(ens.values[j]),
                        format_f64(p16[j]),
                        format_f64(p84[j]),
                    ];
                    if let Some(t) = &theory {
                        rec.push(format_f64(t[j]));
                    }
                    rec
                }),
            )?
        }
        Format::Json => {
            let mut doc = json!({
                "config": model,
                "seeds": cfg.seeds,
                "base_seed": cfg.base_seed,
                "probe": probe,
                "x": x,
                "mean": ens.values,
                "p16": p16,
                "p84": p84,
            });
            if let Some(t) = theory {
                doc["theory"] = json!(t);
            }
            json_bytes(&doc)?
        }
    };
    emit(cfg.out.as_deref(), &bytes)
}
