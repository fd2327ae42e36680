//! The heavy-tailed traffic source on its own: Pareto interarrival
//! times calibrated so a chosen offered load hits a chosen bandwidth,
//! demonstrated by comparing a million draws against the analytic
//! target.
//!
//! ```bash
//! cargo run --example pareto_traffic
//! ```

use epon_coalesce::traffic::calibrate_scale;
use epon_coalesce::{ParetoSource, TrafficConfig};

fn main() {
    let cfg = TrafficConfig {
        alpha: 2.5,
        frame_bytes: 1500,
        load: 0.5,
        rate_bps: 200_000_000,
        seed: 1,
    };
    let frame_bits = f64::from(cfg.frame_bytes) * 8.0;
    let target_mean_ns = frame_bits / (cfg.load * cfg.rate_bps as f64) * 1e9;
    println!(
        "load {} of {} Mb/s with {}-byte frames -> one frame every {:.0} ns on average",
        cfg.load,
        cfg.rate_bps / 1_000_000,
        cfg.frame_bytes,
        target_mean_ns
    );
    println!(
        "Pareto shape alpha = {}, calibrated scale x_m = {:.0} ns",
        cfg.alpha,
        calibrate_scale(&cfg)
    );

    let mut source = ParetoSource::new(&cfg);
    let n = 1_000_000u64;
    let mut draws: Vec<u64> = (0..n).map(|_| source.next_interarrival().as_ns()).collect();
    let sum: u128 = draws.iter().map(|&d| u128::from(d)).sum();
    let mean = sum as f64 / n as f64;
    draws.sort_unstable();
    let q = |p: f64| draws[(p * (n - 1) as f64) as usize];

    println!("\n{n} draws:");
    println!("  empirical mean {mean:.0} ns (target {target_mean_ns:.0}, {:+.2}%)",
        100.0 * (mean - target_mean_ns) / target_mean_ns);
    println!("  median {} ns, p90 {} ns, p99 {} ns, p99.9 {} ns, max {} ns",
        q(0.5), q(0.9), q(0.99), q(0.999), draws[draws.len() - 1]);
    println!(
        "  offered rate {:.1} Mb/s (target {:.1})",
        frame_bits * n as f64 / sum as f64 * 1e9 / 1e6,
        cfg.load * cfg.rate_bps as f64 / 1e6
    );
    println!("\nthe heavy tail is what makes coalescing pay off: most gaps are");
    println!("short (bursts), but long silences let the transmitter sleep.");
}
