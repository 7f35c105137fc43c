//! Seeded experiment runners and result persistence.

mod case1;
mod case2;
mod config;
mod demo;
mod output;

pub use case1::{relative_gain, run_case1, run_case1_cell, Case1Cell};
pub use case2::{run_case2, run_case2_cell, Case2Cell, Case2Entry};
pub use config::{
    layout_factors, load_config, save_config, ConfigError, ExperimentConfig, ExperimentKind,
    MultiUserSection, SurfaceSpec,
};
pub use demo::{run_demo_path_aware, DemoMode, DemoReport};
pub use output::{
    median, read_records, read_trace, records_to_csv, trace_to_csv, write_output, ExperimentOutput,
    NamedTrace, ResultRecord,
};

use crate::error::Result;

/// Runs every seed of a demo config. Rows report the achievable rate per mode.
pub fn run_demo(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    use rayon::prelude::*;
    let reports: Vec<DemoReport> = config
        .seeds
        .par_iter()
        .map(|&s| run_demo_path_aware(config, s))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut traces = Vec::new();
    for r in &reports {
        for m in &r.modes {
            records.push(ResultRecord {
                experiment: "demo".into(),
                seed: r.seed,
                mode: m.mode.to_string(),
                pattern: if m.mode == crate::metrics::Mode::PatternFris {
                    "optimized"
                } else {
                    "isotropic"
                }
                .into(),
                grid: format!("{0}x{0}", r.grid),
                elements: r.grid * r.grid,
                active: r.active,
                bits: None,
                basis_len: (m.mode == crate::metrics::Mode::PatternFris).then_some(r.basis_len),
                tx_antennas: None,
                objective: m.rate,
                runtime_ms: 0.0,
            });
        }
        traces.push(NamedTrace {
            name: format!("demo_s{}_pattern-fris", r.seed),
            rows: r.pattern_trace.clone(),
        });
    }
    let report = serde_json::json!({ "experiment": "demo", "runs": reports });
    Ok(ExperimentOutput {
        records,
        traces,
        report,
    })
}

/// Dispatches on the configured experiment kind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    match config.experiment {
        ExperimentKind::Demo => run_demo(config),
        ExperimentKind::Case1 => run_case1(config),
        ExperimentKind::Case2 => run_case2(config),
    }
}
