//! Property-based checks: randomized configurations must always produce
//! traces the independent rule checker accepts, conserve frames, and
//! keep the simulator's arithmetic identities; pure helpers must hold
//! their algebraic properties on arbitrary inputs.

use proptest::prelude::*;

use epon_coalesce::engine::{Engine, EventClass, EventPayload, TimedEvent, World};
use epon_coalesce::metrics::delay_stats;
use epon_coalesce::mpcp::grant_for;
use epon_coalesce::onu::should_sleep;
use epon_coalesce::trace::NullSink;
use epon_coalesce::traffic::interarrival_from_u;
use epon_coalesce::validate::{ValidatingSink, ValidatorConfig};
use epon_coalesce::{
    aggregate, run, run_with_sink, serialization_ns, ReportMessage, RunConfig, SimTime,
    SleepConfig, TrafficConfig,
};

fn arb_run_config() -> impl Strategy<Value = RunConfig> {
    (
        0.02f64..0.95,
        1usize..=150,
        any::<u64>(),
        200_000_000u64..1_000_000_000,
    )
        .prop_map(|(load, q_w, seed, duration_ns)| RunConfig {
            sleep: SleepConfig {
                q_w,
                ..Default::default()
            },
            traffic: TrafficConfig {
                load,
                seed,
                ..Default::default()
            },
            duration: SimTime(duration_ns),
            ..Default::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Whatever the load, threshold, seed, or length: the trace passes
    /// the independent checker, time is exactly partitioned over the
    /// four states, frames are conserved, and power stays within the
    /// profile's floor and ceiling.
    #[test]
    fn random_runs_validate_clean_and_keep_identities(cfg in arb_run_config()) {
        let mut sink = ValidatingSink::new(ValidatorConfig::for_run(&cfg.dba, &cfg.sleep));
        let result = run_with_sink(&cfg, &mut sink);
        let report = sink.into_report().expect("trace parses");
        prop_assert!(report.is_clean(), "violations: {:?}", &report.violations[..report.violations.len().min(3)]);
        prop_assert!(result.violations.is_empty());

        prop_assert_eq!(result.state_times.total(), cfg.duration);
        prop_assert_eq!(result.frames_in, result.frames_out + result.frames_pending_end);

        let floor = cfg.power.floor_pct();
        prop_assert!(result.power_pct >= floor - 1e-9 && result.power_pct <= 100.0 + 1e-9);

        if result.delay.count > 0 {
            // Nothing departs faster than one serialized frame.
            prop_assert!(result.delay.mean_ms >= 0.0012);
            prop_assert!(result.delay.p95_ms >= 0.0012);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn identical_seeds_reproduce_identical_runs(cfg in arb_run_config()) {
        let a = run(&cfg);
        let b = run(&cfg);
        prop_assert_eq!(a.power_pct, b.power_pct);
        prop_assert_eq!(a.frames_in, b.frames_in);
        prop_assert_eq!(a.frames_out, b.frames_out);
        prop_assert_eq!(a.delay.mean_ms, b.delay.mean_ms);
        prop_assert_eq!(a.state_times, b.state_times);
        prop_assert_eq!(a.events, b.events);
    }
}

struct Recorder {
    seen: Vec<(SimTime, EventClass, u64)>,
}

impl World for Recorder {
    fn handle(&mut self, ev: TimedEvent, _payload: EventPayload, _eng: &mut Engine<'_>) {
        self.seen.push((ev.time, ev.class, ev.seq));
    }
}

proptest! {
    /// Events come out in (time, class, insertion) order no matter how
    /// they went in.
    #[test]
    fn event_dispatch_is_totally_ordered(
        times in proptest::collection::vec(0u64..1_000_000, 1..200),
        classes in proptest::collection::vec(0u8..6, 1..200),
    ) {
        let mut sink = NullSink;
        let mut engine = Engine::new(&mut sink);
        let n = times.len().min(classes.len());
        for i in 0..n {
            let class = match classes[i] {
                0 => EventClass::CycleBoundary,
                1 => EventClass::GateDelivery,
                2 => EventClass::ReportSlot,
                3 => EventClass::DataSlotBoundary,
                4 => EventClass::FrameArrival,
                _ => EventClass::Timer,
            };
            engine.schedule(SimTime(times[i]), class, EventPayload::PowerOnTimer);
        }
        let mut world = Recorder { seen: Vec::new() };
        engine.run_until(&mut world, SimTime(1_000_000));
        prop_assert_eq!(world.seen.len(), n);
        for pair in world.seen.windows(2) {
            let a = (pair[0].0, pair[0].1, pair[0].2);
            let b = (pair[1].0, pair[1].1, pair[1].2);
            prop_assert!(a < b, "dispatch order broke: {a:?} then {b:?}");
        }
    }

    /// Report slots land on the cycle grid, never in the past, and
    /// always within one cycle of the earliest allowed instant.
    #[test]
    fn report_slots_stay_on_grid(t in 0u64..10_000_000_000, offset_frac in 0u64..100) {
        let mut dba = epon_coalesce::DbaConfig::default();
        dba.slot_offset = SimTime(dba.cycle_len.as_ns() * offset_frac / 100);
        let slot = dba.next_report_slot(SimTime(t));
        prop_assert!(slot.as_ns() >= t);
        prop_assert!(slot.as_ns() < t + dba.cycle_len.as_ns());
        prop_assert_eq!(
            (slot.as_ns() + dba.cycle_len.as_ns() - dba.slot_offset.as_ns())
                % dba.cycle_len.as_ns(),
            0
        );
    }

    #[test]
    fn serialization_time_is_monotone_and_subadditive(
        a in 1u64..1_000_000,
        b in 1u64..1_000_000,
        rate in 1_000_000u64..100_000_000_000,
    ) {
        let sa = serialization_ns(a, rate);
        let sb = serialization_ns(b, rate);
        let sab = serialization_ns(a + b, rate);
        prop_assert!(sab >= sa);
        prop_assert!(sab >= sb);
        prop_assert!(sab.as_ns() <= sa.as_ns() + sb.as_ns());
    }

    #[test]
    fn grants_never_exceed_cap_or_backlog(queue in 0u64..10_000_000, cap in 1u64..100_000) {
        let report = ReportMessage { sent_at: SimTime::ZERO, queue_bytes: queue };
        let grant = grant_for(Some(&report), cap);
        prop_assert!(grant <= cap);
        prop_assert!(grant <= queue);
        prop_assert_eq!(grant_for(None, cap), 0);
    }

    #[test]
    fn sleep_rule_is_strictly_below_threshold(len in 0usize..1000, q_w in 1usize..1000) {
        prop_assert_eq!(should_sleep(len, q_w), len < q_w);
    }

    #[test]
    fn delay_statistics_sit_inside_the_sample_range(
        mut delays in proptest::collection::vec(1u64..100_000_000, 1..500),
    ) {
        let summary = delay_stats(&mut delays.clone());
        let lo = *delays.iter().min().unwrap() as f64 / 1e6;
        let hi = *delays.iter().max().unwrap() as f64 / 1e6;
        prop_assert!(summary.mean_ms >= lo - 1e-9 && summary.mean_ms <= hi + 1e-9);
        prop_assert!(summary.p95_ms >= lo - 1e-9 && summary.p95_ms <= hi + 1e-9);
        // Permutation invariance.
        delays.reverse();
        let again = delay_stats(&mut delays);
        prop_assert_eq!(summary.mean_ms, again.mean_ms);
        prop_assert_eq!(summary.p95_ms, again.p95_ms);
    }

    #[test]
    fn aggregation_stays_inside_the_sample_range(
        values in proptest::collection::vec(0.0f64..100.0, 1..50),
    ) {
        let agg = aggregate(&values);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(agg.mean >= lo - 1e-9 && agg.mean <= hi + 1e-9);
        prop_assert!(agg.ci95 >= 0.0);
        prop_assert_eq!(agg.n, values.len());
    }

    /// Pareto draws never undershoot the scale parameter and shrink as
    /// the uniform input grows.
    #[test]
    fn interarrivals_respect_the_scale(u1 in 0.0001f64..1.0, u2 in 0.0001f64..1.0) {
        let x_m = 36_000.0;
        let alpha = 2.5;
        let a = interarrival_from_u(x_m, alpha, u1);
        let b = interarrival_from_u(x_m, alpha, u2);
        prop_assert!(a.as_ns() as f64 >= x_m - 1.0);
        if u1 < u2 {
            prop_assert!(a >= b);
        }
    }
}
