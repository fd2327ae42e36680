//! The independent trace checker in action: a clean run passes all nine
//! protocol rules, and corrupted copies of the same trace are caught —
//! here an illegal state jump and a grant overrun.
//!
//! ```bash
//! cargo run --example validate_trace
//! ```

use epon_coalesce::validate::{validate_text, ValidatorConfig};
use epon_coalesce::{run_with_sink, RunConfig, SimTime, TrafficConfig, VecSink};

fn main() {
    let cfg = RunConfig {
        traffic: TrafficConfig {
            load: 0.4,
            seed: 3,
            ..Default::default()
        },
        duration: SimTime::from_secs(1),
        ..Default::default()
    };
    let mut sink = VecSink::new();
    run_with_sink(&cfg, &mut sink);
    let clean = sink.to_text();
    let vcfg = ValidatorConfig::for_run(&cfg.dba, &cfg.sleep);

    let report = validate_text(&clean, vcfg.clone()).unwrap();
    println!(
        "clean trace: {} lines checked, {} violations",
        report.lines,
        report.violations.len()
    );
    assert!(report.is_clean());

    // Corruption 1: teleport the automaton from off straight to on.
    let corrupted = clean.replacen("state off wait", "state off on", 1);
    let report = validate_text(&corrupted, vcfg.clone()).unwrap();
    println!("\nafter injecting an off->on jump:");
    for v in report.violations.iter().take(3) {
        println!("  {v}");
    }

    // Corruption 2: a data slot claiming more bytes than its grant.
    let mut lines: Vec<String> = clean.lines().map(String::from).collect();
    if let Some(slot) = lines
        .iter_mut()
        .find(|l| l.contains(" data_slot ") && !l.ends_with(" 0 0"))
    {
        let mut fields: Vec<String> = slot.split_whitespace().map(String::from).collect();
        let grant: u64 = fields[2].parse().unwrap();
        fields[4] = (2 * grant).to_string();
        *slot = fields.join(" ");
    }
    let report = validate_text(&lines.join("\n"), vcfg).unwrap();
    println!("\nafter doubling one slot's transmitted bytes:");
    for v in report.violations.iter().take(3) {
        println!("  {v}");
    }
    println!("\nrules checked: state-sequence, unpowered-transmission, trans-data,");
    println!("  grant-mismatch, grant-exceeded, report-cadence, poweron-anticipation,");
    println!("  fifo-order, time-partition");
}
