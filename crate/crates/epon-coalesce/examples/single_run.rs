//! One simulated run, end to end: an ONU under Pareto traffic coalesces
//! frames while its transmitter sleeps, and the run reports state
//! occupancy, relative power, and frame delay.
//!
//! ```bash
//! cargo run --example single_run
//! ```

use epon_coalesce::{run, RunConfig, SimTime, SleepConfig, TrafficConfig};

fn main() {
    let cfg = RunConfig {
        sleep: SleepConfig {
            q_w: 10,
            ..Default::default()
        },
        traffic: TrafficConfig {
            load: 0.5,
            seed: 7,
            ..Default::default()
        },
        duration: SimTime::from_secs(100),
        ..Default::default()
    };

    println!(
        "simulating {} s at load {} with wake threshold {} frames",
        cfg.duration.as_secs_f64(),
        cfg.traffic.load,
        cfg.sleep.q_w
    );
    let result = run(&cfg);

    let t = &result.state_times;
    let total = t.total().as_secs_f64();
    println!("\nstate occupancy:");
    for (name, span) in [("off", t.off), ("wait", t.wait), ("trans", t.trans), ("on", t.on)] {
        println!(
            "  {name:<5} {:>9.3} s  ({:>5.1}%)",
            span.as_secs_f64(),
            100.0 * span.as_secs_f64() / total
        );
    }

    let ideal = cfg.power.floor_pct() + (100.0 - cfg.power.floor_pct()) * cfg.traffic.load;
    println!("\npower: {:.1}% of always-on (ideal coalescer: {:.1}%)", result.power_pct, ideal);
    println!(
        "delay: mean {:.2} ms, 95th percentile {:.2} ms over {} frames",
        result.delay.mean_ms, result.delay.p95_ms, result.delay.count
    );
    println!(
        "frames: {} arrived, {} delivered, {} still queued at the end",
        result.frames_in, result.frames_out, result.frames_pending_end
    );
    println!(
        "wake cycles: {} (sleep entries observed)",
        result.transitions.sleep_cycles()
    );
    assert!(result.violations.is_empty());
}
