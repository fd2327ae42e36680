//! Sweep execution: expand a configuration into (load, q_w, seed) runs,
//! execute them (in parallel when available), aggregate per sweep point,
//! and serialize results as CSV and plot-ready tab-separated tables.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::metrics::{aggregate, Aggregate};
use crate::run::{run, run_with_sink, RunConfig, RunResult};
use crate::trace::{TeeSink, WriteSink};
use crate::validate::{ValidateError, ValidatingSink, ValidatorConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run load {load} q_w {q_w} seed {seed_index} failed validation:\n{report}")]
    Validation {
        load: f64,
        q_w: usize,
        seed_index: u32,
        report: String,
    },
    #[error("run load {load} q_w {q_w} seed {seed_index} produced an unreadable trace: {source}")]
    Unreadable {
        load: f64,
        q_w: usize,
        seed_index: u32,
        source: ValidateError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One scheduled run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPoint {
    pub load: f64,
    pub q_w: usize,
    pub seed_index: u32,
    /// RNG seed derived from the base seed and the three sweep indices.
    pub seed: u64,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the RNG seed for one run from the base seed and the run's
/// position in the sweep. Depending only on indices (never on list
/// lengths) means adding sweep points leaves existing runs' randomness
/// untouched.
pub fn derive_seed(base: u64, load_idx: u64, qw_idx: u64, seed_idx: u64) -> u64 {
    let mut s = splitmix64(base);
    s = splitmix64(s ^ load_idx);
    s = splitmix64(s ^ qw_idx);
    splitmix64(s ^ seed_idx)
}

/// Expands a configuration into its run list: loads outermost, then
/// thresholds, then seeds. CSV rows appear in this order.
pub fn expand(cfg: &ExperimentConfig) -> Vec<RunPoint> {
    let mut points = Vec::with_capacity(cfg.loads.len() * cfg.q_ws.len() * cfg.seeds as usize);
    for (li, &load) in cfg.loads.iter().enumerate() {
        for (qi, &q_w) in cfg.q_ws.iter().enumerate() {
            for seed_index in 0..cfg.seeds {
                points.push(RunPoint {
                    load,
                    q_w,
                    seed_index,
                    seed: derive_seed(cfg.base_seed, li as u64, qi as u64, u64::from(seed_index)),
                });
            }
        }
    }
    points
}

/// A completed run with its sweep coordinates.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub point: RunPoint,
    pub result: RunResult,
}

/// Seed-aggregated results for one (load, q_w) sweep point.
#[derive(Debug, Clone)]
pub struct PointSummary {
    pub load: f64,
    pub q_w: usize,
    pub t_off_s: f64,
    pub t_wait_s: f64,
    pub t_trans_s: f64,
    pub t_on_s: f64,
    pub power: Aggregate,
    pub mean_delay_ms: Aggregate,
    pub p95_delay_ms: f64,
    pub frames_in: f64,
    pub frames_out: f64,
}

/// All rows of one executed sweep, runs in expansion order and one
/// summary per (load, q_w) point in the same order.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub runs: Vec<RunRow>,
    pub points: Vec<PointSummary>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Re-check every run's trace against the protocol rules and fail
    /// the sweep on the first violation.
    pub validate: bool,
    /// Dump each run's trace to `<dir>/trace_load<ρ>_qw<n>_seed<i>.txt`.
    pub trace_dir: Option<PathBuf>,
}

fn mean_of<F: Fn(&RunRow) -> f64>(rows: &[RunRow], f: F) -> f64 {
    rows.iter().map(f).sum::<f64>() / rows.len() as f64
}

fn summarize(runs: &[RunRow], per_point: usize) -> Vec<PointSummary> {
    runs.chunks(per_point)
        .map(|group| {
            let powers: Vec<f64> = group.iter().map(|r| r.result.power_pct).collect();
            let delays: Vec<f64> = group.iter().map(|r| r.result.delay.mean_ms).collect();
            let first = &group[0];
            PointSummary {
                load: first.point.load,
                q_w: first.point.q_w,
                t_off_s: mean_of(group, |r| r.result.state_times.off.as_secs_f64()),
                t_wait_s: mean_of(group, |r| r.result.state_times.wait.as_secs_f64()),
                t_trans_s: mean_of(group, |r| r.result.state_times.trans.as_secs_f64()),
                t_on_s: mean_of(group, |r| r.result.state_times.on.as_secs_f64()),
                power: aggregate(&powers),
                mean_delay_ms: aggregate(&delays),
                p95_delay_ms: mean_of(group, |r| r.result.delay.p95_ms),
                frames_in: mean_of(group, |r| r.result.frames_in as f64),
                frames_out: mean_of(group, |r| r.result.frames_out as f64),
            }
        })
        .collect()
}

fn run_one(
    run_cfg: &RunConfig,
    point: &RunPoint,
    opts: &SweepOptions,
) -> Result<RunResult, ExperimentError> {
    let trace_path = opts.trace_dir.as_ref().map(|dir| {
        dir.join(format!(
            "trace_load{}_qw{}_seed{}.txt",
            point.load, point.q_w, point.seed_index
        ))
    });
    let mut file_sink = match &trace_path {
        Some(path) => Some(WriteSink::new(BufWriter::new(std::fs::File::create(path)?))),
        None => None,
    };
    let mut check_sink = if opts.validate {
        Some(ValidatingSink::new(ValidatorConfig::for_run(
            &run_cfg.dba,
            &run_cfg.sleep,
        )))
    } else {
        None
    };

    let result = match (&mut check_sink, &mut file_sink) {
        (None, None) => run(run_cfg),
        (Some(v), None) => run_with_sink(run_cfg, v),
        (None, Some(f)) => run_with_sink(run_cfg, f),
        (Some(v), Some(f)) => {
            let mut tee = TeeSink {
                first: v,
                second: f,
            };
            run_with_sink(run_cfg, &mut tee)
        }
    };

    if let Some(sink) = file_sink {
        let mut writer = sink.into_inner();
        writer.flush()?;
    }
    if let Some(sink) = check_sink {
        let report = sink.into_report().map_err(|source| ExperimentError::Unreadable {
            load: point.load,
            q_w: point.q_w,
            seed_index: point.seed_index,
            source,
        })?;
        if !report.is_clean() {
            let shown: Vec<String> = report
                .violations
                .iter()
                .take(10)
                .map(ToString::to_string)
                .collect();
            let mut text = shown.join("\n");
            if report.violations.len() > 10 {
                text.push_str(&format!(
                    "\n... and {} more",
                    report.violations.len() - 10
                ));
            }
            return Err(ExperimentError::Validation {
                load: point.load,
                q_w: point.q_w,
                seed_index: point.seed_index,
                report: text,
            });
        }
    }
    Ok(result)
}

/// Runs the whole sweep. Runs execute in parallel; results keep
/// expansion order, so output is deterministic regardless of scheduling.
pub fn execute(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<Sweep, ExperimentError> {
    cfg.validate()?;
    if let Some(dir) = &opts.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let points = expand(cfg);
    let runs: Vec<RunRow> = points
        .par_iter()
        .map(|point| {
            let run_cfg = cfg.run_config(point.load, point.q_w, point.seed);
            run_one(&run_cfg, point, opts).map(|result| RunRow {
                point: *point,
                result,
            })
        })
        .collect::<Result<_, _>>()?;
    let points = summarize(&runs, cfg.seeds as usize);
    Ok(Sweep { runs, points })
}

pub const CSV_HEADER: &str = "load,q_w,seed,t_off_s,t_wait_s,t_trans_s,t_on_s,power_pct,\
mean_delay_ms,p95_delay_ms,frames_in,frames_out,ci95_power,ci95_delay";

/// Renders the sweep as CSV: one row per run, then one `seed=agg` row
/// after each (load, q_w) group. Fixed formatting keeps reruns
/// byte-identical.
pub fn write_csv(cfg: &ExperimentConfig, sweep: &Sweep) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let per_point = cfg.seeds as usize;
    for (group, summary) in sweep.runs.chunks(per_point).zip(&sweep.points) {
        for row in group {
            let r = &row.result;
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.4},{:.4},{:.4},{},{},,\n",
                row.point.load,
                row.point.q_w,
                row.point.seed_index,
                r.state_times.off.as_secs_f64(),
                r.state_times.wait.as_secs_f64(),
                r.state_times.trans.as_secs_f64(),
                r.state_times.on.as_secs_f64(),
                r.power_pct,
                r.delay.mean_ms,
                r.delay.p95_ms,
                r.frames_in,
                r.frames_out,
            ));
        }
        out.push_str(&format!(
            "{},{},agg,{:.6},{:.6},{:.6},{:.6},{:.4},{:.4},{:.4},{:.1},{:.1},{:.4},{:.4}\n",
            summary.load,
            summary.q_w,
            summary.t_off_s,
            summary.t_wait_s,
            summary.t_trans_s,
            summary.t_on_s,
            summary.power.mean,
            summary.mean_delay_ms.mean,
            summary.p95_delay_ms,
            summary.frames_in,
            summary.frames_out,
            summary.power.ci95,
            summary.mean_delay_ms.ci95,
        ));
    }
    out
}

/// Writes the three plot-ready tables: state occupancy fractions, power
/// versus the ideal reference line, and mean delay — all keyed by load,
/// tab-separated, one header line each.
pub fn emit_plotdata(cfg: &ExperimentConfig, sweep: &Sweep, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let point = |li: usize, qi: usize| &sweep.points[li * cfg.q_ws.len() + qi];

    let mut fractions = String::from("load\tq_w\tstate\tfraction\n");
    for li in 0..cfg.loads.len() {
        for qi in 0..cfg.q_ws.len() {
            let p = point(li, qi);
            let total = p.t_off_s + p.t_wait_s + p.t_trans_s + p.t_on_s;
            for (state, secs) in [
                ("off", p.t_off_s),
                ("wait", p.t_wait_s),
                ("trans", p.t_trans_s),
                ("on", p.t_on_s),
            ] {
                fractions.push_str(&format!(
                    "{}\t{}\t{}\t{:.6}\n",
                    p.load,
                    p.q_w,
                    state,
                    secs / total
                ));
            }
        }
    }
    std::fs::write(dir.join("state_fractions.tsv"), fractions)?;

    let floor = cfg.power.floor_pct();
    let mut power = String::from("load");
    let mut delay = String::from("load");
    for &q_w in &cfg.q_ws {
        power.push_str(&format!("\tpower_qw{q_w}"));
        delay.push_str(&format!("\tdelay_ms_qw{q_w}"));
    }
    power.push_str("\tideal\n");
    delay.push('\n');
    for (li, &load) in cfg.loads.iter().enumerate() {
        power.push_str(&load.to_string());
        delay.push_str(&load.to_string());
        for qi in 0..cfg.q_ws.len() {
            let p = point(li, qi);
            power.push_str(&format!("\t{:.4}", p.power.mean));
            delay.push_str(&format!("\t{:.4}", p.mean_delay_ms.mean));
        }
        power.push_str(&format!("\t{:.4}\n", floor + (100.0 - floor) * load));
        delay.push('\n');
    }
    std::fs::write(dir.join("power.tsv"), power)?;
    std::fs::write(dir.join("delay.tsv"), delay)?;
    Ok(())
}
