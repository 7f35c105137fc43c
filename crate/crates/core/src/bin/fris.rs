use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fris::experiment::{
    load_config, run_experiment, write_output, ExperimentConfig, ExperimentKind,
};

/// Seeded FRIS experiments.
#[derive(Parser)]
#[command(name = "fris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Path-aware modulation demo (one channel, three surface variants).
    Demo(RunArgs),
    /// Position-reconfigurable surface, rate versus grid size.
    Case1(RunArgs),
    /// Pattern-reconfigurable surface, multi-user weighted sum rate.
    Case2(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First seed; the run uses as many consecutive seeds as the config lists.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of logical CPUs.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Demo(a) => (ExperimentKind::Demo, a),
        Command::Case1(a) => (ExperimentKind::Case1, a),
        Command::Case2(a) => (ExperimentKind::Case2, a),
    };
    let config = match prepare(kind, &args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(kind.as_str()));

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let started = std::time::Instant::now();
    let result = pool
        .install(|| run_experiment(&config))
        .and_then(|o| write_output(&out, &o).map(|_| o));
    match result {
        Ok(o) => {
            eprintln!(
                "{}: {} rows written to {} in {:.1} s",
                kind.as_str(),
                o.records.len(),
                out.display(),
                started.elapsed().as_secs_f64()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn prepare(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut config = match &args.config {
        Some(path) => load_config(path).map_err(|e| e.to_string())?,
        None => ExperimentConfig::defaults(kind),
    };
    if config.experiment != kind {
        return Err(format!(
            "config describes experiment `{}` but `{}` was requested",
            config.experiment.as_str(),
            kind.as_str()
        ));
    }
    if let Some(first) = args.seed {
        let n = config.seeds.len() as u64;
        config.seeds = (0..n).map(|i| first.wrapping_add(i)).collect();
    }
    if args.threads == Some(0) {
        return Err("`--threads` must be at least 1".into());
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}
