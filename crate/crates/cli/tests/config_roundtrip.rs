//! Lossless TOML round trip of arbitrary run configs.

use std::path::PathBuf;

use proptest::prelude::*;
use ushape_cli::config::{Command, Format, GridSpec, RunConfig, Toggle};
use ushape_core::exact_kernel::Method;
use ushape_core::quadrature::QuadRule;
use ushape_core::toy::AttentionMode;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, 1e-300f64..1e-3, Just(0.0), Just(1e300)]
}

fn config() -> impl Strategy<Value = RunConfig> {
    let commands = prop::sample::select(vec![Command::Kernel, Command::Density, Command::Simulate, Command::Compare, Command::Sweep]);
    let methods = prop::collection::vec(prop::sample::select(Method::ALL.to_vec()), 0..4);
    let grid = prop_oneof![
        Just(None),
        (1usize..5000).prop_map(|n| Some(GridSpec::Count(n))),
        prop::collection::vec(0.0f64..=1.0, 1..6).prop_map(|v| Some(GridSpec::Points(v))),
    ];
    let alpha = prop_oneof![Just(None), (0u32..9, 1u32..9).prop_map(|(p, q)| Some(format!("{p}/{q}"))), finite().prop_map(|x| Some(x.to_string()))];
    let words = prop::collection::vec("[a-z-]{1,12}", 0..4);
    let path = prop::option::of("[a-z0-9_/]{1,20}\\.(csv|json)".prop_map(PathBuf::from));
    (
        (prop::option::of(commands), 1usize..100_000, 0u32..200, alpha, methods, grid),
        (1usize..512, any::<u32>(), 1usize..1024, 1usize..64, 1usize..1024, any::<bool>(), finite()),
        (
            prop::sample::select(vec![AttentionMode::UniformLinear, AttentionMode::SoftmaxRandom]),
            prop::sample::select(vec!["kaiming".to_string(), "scalar:0.5".to_string()]),
            words,
            prop::option::of(finite()),
            prop::option::of(finite()),
            path.clone(),
            any::<bool>(),
        ),
        (
            prop::sample::select(vec![QuadRule::Auto, QuadRule::GaussLaguerre, QuadRule::WindowedLegendre, QuadRule::GaussLegendre]),
            1usize..4096,
            finite(),
            prop::option::of(finite()),
            prop::collection::vec(finite(), 0..6),
            prop::option::of("[0-9.,=]{0,12}"),
            path,
        ),
    )
        .prop_map(|(a, b, c, d)| RunConfig {
            command: a.0,
            len: a.1,
            depth: a.2,
            alpha: a.3,
            method: a.4,
            grid: a.5,
            seeds: b.0,
            base_seed: u64::from(b.1),
            d: b.2,
            heads: b.3,
            dk: b.4,
            rope: if b.5 { Toggle::On } else { Toggle::Off },
            rope_theta: b.6,
            attention: c.0,
            init: c.1,
            metric: c.2,
            gate_spearman: c.3,
            gate_wasserstein: c.4,
            out: c.5,
            gate: c.6,
            format: if c.6 { Format::Json } else { Format::Csv },
            quad: d.0,
            quad_nodes: d.1,
            quad_tol: d.2,
            log_floor: d.3,
            x: d.4,
            sweep_depth: d.5,
            raw_out: d.6,
            ..RunConfig::default()
        })
}

proptest! {
    #[test]
    fn toml_round_trip_is_lossless(c in config()) {
        let text = c.to_toml().unwrap();
        prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }
}
