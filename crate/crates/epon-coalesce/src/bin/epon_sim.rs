//! Sweep runner: merges defaults, an optional config file, and flag
//! overrides, executes every (load, q_w, seed) run, and writes the CSV
//! results plus optional trace dumps and plot-ready tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use epon_coalesce::experiment::{emit_plotdata, execute, expand, write_csv, ExperimentError, SweepOptions};
use epon_coalesce::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "epon-sim",
    version,
    about = "Simulate an EPON upstream channel whose ONU sleeps between coalesced bursts"
)]
struct Cli {
    /// Configuration file of flat `key = value` lines (`#` comments).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Offered load(s) in (0, 1]; repeatable or comma-separated.
    #[arg(long = "load", value_name = "LOAD", value_delimiter = ',')]
    load: Vec<String>,

    /// Wake threshold(s) in frames; repeatable or comma-separated.
    #[arg(long = "qw", value_name = "N", value_delimiter = ',')]
    qw: Vec<String>,

    /// Seeded repetitions per sweep point.
    #[arg(long, value_name = "N")]
    seeds: Option<u32>,

    /// Simulated seconds per run.
    #[arg(long = "duration-s", value_name = "SECONDS")]
    duration_s: Option<f64>,

    /// Simulated seconds to discard before measuring.
    #[arg(long = "warmup-s", value_name = "SECONDS")]
    warmup_s: Option<f64>,

    /// Root seed for the per-run seed derivation.
    #[arg(long = "base-seed", value_name = "SEED")]
    base_seed: Option<u64>,

    /// Results CSV path.
    #[arg(long, value_name = "CSV", default_value = "results.csv")]
    out: PathBuf,

    /// Directory for per-run trace dumps.
    #[arg(long = "trace-dir", value_name = "DIR")]
    trace_dir: Option<PathBuf>,

    /// Re-check every run's trace against the protocol rules; abort
    /// with the violation report if any rule breaks.
    #[arg(long)]
    validate: bool,

    /// Directory for plot-ready tab-separated tables.
    #[arg(long, value_name = "DIR")]
    plotdata: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_path(path)?;
    }
    if !cli.load.is_empty() {
        cfg.apply_entry("run.loads", &cli.load.join(","))?;
    }
    if !cli.qw.is_empty() {
        cfg.apply_entry("onu.q_w", &cli.qw.join(","))?;
    }
    if let Some(n) = cli.seeds {
        cfg.apply_entry("run.seeds", &n.to_string())?;
    }
    if let Some(secs) = cli.duration_s {
        cfg.apply_entry("run.duration_s", &secs.to_string())?;
    }
    if let Some(secs) = cli.warmup_s {
        cfg.apply_entry("run.warmup_s", &secs.to_string())?;
    }
    if let Some(seed) = cli.base_seed {
        cfg.apply_entry("run.base_seed", &seed.to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_cli(cli: &Cli) -> Result<(), ExperimentError> {
    let cfg = build_config(cli)?;
    let opts = SweepOptions {
        validate: cli.validate,
        trace_dir: cli.trace_dir.clone(),
    };
    let planned = expand(&cfg).len();
    eprintln!(
        "running {planned} simulations ({} loads x {} thresholds x {} seeds, {} s each)",
        cfg.loads.len(),
        cfg.q_ws.len(),
        cfg.seeds,
        cfg.duration.as_secs_f64()
    );
    let started = std::time::Instant::now();
    let sweep = execute(&cfg, &opts)?;
    let csv = write_csv(&cfg, &sweep);
    std::fs::write(&cli.out, &csv)?;
    eprintln!(
        "wrote {} rows to {} in {:.1} s",
        csv.lines().count() - 1,
        cli.out.display(),
        started.elapsed().as_secs_f64()
    );
    if let Some(dir) = &cli.trace_dir {
        eprintln!("trace dumps in {}", dir.display());
    }
    if let Some(dir) = &cli.plotdata {
        emit_plotdata(&cfg, &sweep, dir)?;
        eprintln!("plot tables in {}", dir.display());
    }
    if cli.validate {
        eprintln!("all {planned} traces validated clean");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ ExperimentError::Validation { .. }) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
