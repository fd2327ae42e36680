//! The raw event trace of a short run: watch the ONU cross its wake
//! threshold, power on in time for a report slot, receive its grant,
//! burst the queue out, send the final report, and go back to sleep.
//!
//! ```bash
//! cargo run --example trace_dump
//! ```

use epon_coalesce::{run_with_sink, RunConfig, SimTime, SleepConfig, TrafficConfig, VecSink};

fn main() {
    let cfg = RunConfig {
        sleep: SleepConfig {
            q_w: 5,
            ..Default::default()
        },
        traffic: TrafficConfig {
            load: 0.2,
            seed: 11,
            ..Default::default()
        },
        duration: SimTime::from_ms(25),
        ..Default::default()
    };
    let mut sink = VecSink::new();
    let result = run_with_sink(&cfg, &mut sink);

    println!("# one line per event: <time-ns> <kind> <fields...>");
    println!("# wake threshold {} frames, power-on latency {} ns, cycle {} ns",
        cfg.sleep.q_w, cfg.sleep.delta_on, cfg.dba.cycle_len);
    for line in sink.to_text().lines() {
        let annotation = match line.split_whitespace().nth(1) {
            Some("state") => "   <-- automaton moved",
            Some("gate") => match line.ends_with(" 0") {
                true => "",
                false => "   <-- nonzero grant scheduled",
            },
            _ => "",
        };
        println!("{line}{annotation}");
    }
    println!(
        "\n{} events, {} frames in, {} delivered, transmitter powered {:.1}% of the time",
        result.events,
        result.frames_in,
        result.frames_out,
        100.0 * result.state_times.powered().as_secs_f64()
            / result.state_times.total().as_secs_f64()
    );
}
