//! A small load × threshold sweep with seed aggregation: how power and
//! delay trade off as the wake threshold grows.
//!
//! The full command-line runner (`epon-sim`) does the same at scale and
//! writes CSV plus plot-ready tables; this example keeps the output on
//! stdout.
//!
//! ```bash
//! cargo run --example sweep
//! ```

use epon_coalesce::experiment::{execute, SweepOptions};
use epon_coalesce::ExperimentConfig;

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_file(
        "run.loads = 0.1, 0.3, 0.5, 0.7, 0.9\n\
         onu.q_w = 1, 10, 100\n\
         run.seeds = 3\n\
         run.duration_s = 10",
    )
    .unwrap();
    cfg.validate().unwrap();

    println!(
        "sweeping {} loads x {} thresholds x {} seeds, {} s each...\n",
        cfg.loads.len(),
        cfg.q_ws.len(),
        cfg.seeds,
        cfg.duration.as_secs_f64()
    );
    let sweep = execute(&cfg, &SweepOptions::default()).unwrap();

    let floor = cfg.power.floor_pct();
    println!("power (% of always-on), mean over seeds with 95% half-width:");
    print!("{:>6}", "load");
    for q in &cfg.q_ws {
        print!("{:>16}", format!("q_w={q}"));
    }
    println!("{:>10}", "ideal");
    for (li, load) in cfg.loads.iter().enumerate() {
        print!("{load:>6}");
        for qi in 0..cfg.q_ws.len() {
            let p = &sweep.points[li * cfg.q_ws.len() + qi];
            print!("{:>16}", format!("{:.1} ±{:.1}", p.power.mean, p.power.ci95));
        }
        println!("{:>10.1}", floor + (100.0 - floor) * load);
    }

    println!("\nmean delay (ms):");
    print!("{:>6}", "load");
    for q in &cfg.q_ws {
        print!("{:>16}", format!("q_w={q}"));
    }
    println!();
    for (li, load) in cfg.loads.iter().enumerate() {
        print!("{load:>6}");
        for qi in 0..cfg.q_ws.len() {
            let p = &sweep.points[li * cfg.q_ws.len() + qi];
            print!("{:>16.2}", p.mean_delay_ms.mean);
        }
        println!();
    }
    println!("\nhigher thresholds save more power; the price is coalescing delay.");
}
