//! Run statistics: state occupancy, relative power, delays, aggregation.
//!
//! Everything here is either a pure function over collected numbers or the
//! streaming [`RunCollector`], which builds those numbers directly from the
//! trace-record stream so a run never has to be buffered in memory.
//!
//! Power is reported as a percentage of an always-on transmitter, because
//! only the active-to-sleep power *ratio* is physically meaningful here;
//! with the default 10:1 ratio a permanently sleeping ONU scores 10% and
//! the best any traffic-carrying schedule could do is `10 + 90·load`.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::onu::OnuState;
use crate::time::SimTime;
use crate::trace::{TraceRecord, TraceSink};

/// Relative power draw per automaton state. Only the ratio matters;
/// `off`/`wait` share the sleep level, `trans`/`on` the active level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub p_on: f64,
    pub p_off: f64,
}

impl Default for PowerProfile {
    fn default() -> Self {
        PowerProfile {
            p_on: 1.0,
            p_off: 0.1,
        }
    }
}

impl PowerProfile {
    /// Consumption of a never-waking ONU, in percent of always-on.
    pub fn floor_pct(&self) -> f64 {
        100.0 * self.p_off / self.p_on
    }

    /// Lower bound for a mechanism with zero transition overhead: sleep
    /// power plus the active share strictly needed to carry the load.
    pub fn ideal_pct(&self, load: f64) -> f64 {
        let floor = self.floor_pct();
        floor + (100.0 - floor) * load
    }
}

/// Total time spent in each automaton state. Integer nanoseconds, so the
/// four components partition the observed window exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StateTimes {
    pub off: SimTime,
    pub wait: SimTime,
    pub trans: SimTime,
    pub on: SimTime,
}

impl StateTimes {
    pub fn add(&mut self, state: OnuState, dur: SimTime) {
        let slot = match state {
            OnuState::Off => &mut self.off,
            OnuState::Wait => &mut self.wait,
            OnuState::Trans => &mut self.trans,
            OnuState::On => &mut self.on,
        };
        *slot += dur;
    }

    pub fn get(&self, state: OnuState) -> SimTime {
        match state {
            OnuState::Off => self.off,
            OnuState::Wait => self.wait,
            OnuState::Trans => self.trans,
            OnuState::On => self.on,
        }
    }

    pub fn total(&self) -> SimTime {
        self.off + self.wait + self.trans + self.on
    }

    /// Time with the transmitter powered (full draw).
    pub fn powered(&self) -> SimTime {
        self.trans + self.on
    }

    /// Time with the transmitter unpowered (sleep draw).
    pub fn unpowered(&self) -> SimTime {
        self.off + self.wait
    }

    pub fn fraction(&self, state: OnuState) -> f64 {
        self.get(state).as_secs_f64() / self.total().as_secs_f64()
    }

    /// Energy drawn relative to an always-on transmitter, in percent.
    pub fn power_pct(&self, profile: &PowerProfile) -> f64 {
        let total = self.total().as_secs_f64();
        assert!(total > 0.0, "power over an empty window is undefined");
        let active = self.powered().as_secs_f64();
        let asleep = self.unpowered().as_secs_f64();
        100.0 * (active * profile.p_on + asleep * profile.p_off) / (total * profile.p_on)
    }
}

/// Packet-delay statistics over one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySummary {
    pub count: u64,
    pub mean_ms: f64,
    /// 95th percentile, nearest-rank definition.
    pub p95_ms: f64,
}

/// Mean and nearest-rank 95th percentile of arrival-to-line delays.
/// Sorts `delays_ns` in place. An empty slice yields NaN statistics.
pub fn delay_stats(delays_ns: &mut [u64]) -> DelaySummary {
    if delays_ns.is_empty() {
        return DelaySummary {
            count: 0,
            mean_ms: f64::NAN,
            p95_ms: f64::NAN,
        };
    }
    delays_ns.sort_unstable();
    let n = delays_ns.len();
    let sum: u128 = delays_ns.iter().map(|&d| u128::from(d)).sum();
    let mean_ns = sum as f64 / n as f64;
    let rank = ((0.95 * n as f64).ceil() as usize).max(1);
    let p95_ns = delays_ns[rank - 1] as f64;
    DelaySummary {
        count: n as u64,
        mean_ms: mean_ns / 1e6,
        p95_ms: p95_ns / 1e6,
    }
}

/// Cross-seed mean with a Student-t 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

/// Aggregates replicate measurements of one quantity. With a single
/// sample the half-width is reported as 0 (no dispersion information).
pub fn aggregate(samples: &[f64]) -> Aggregate {
    assert!(!samples.is_empty(), "cannot aggregate zero samples");
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Aggregate { mean, ci95: 0.0, n };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975);
    Aggregate {
        mean,
        ci95: t * (var / n as f64).sqrt(),
        n,
    }
}

/// Transition counts between automaton states, indexed `[from][to]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransitionCounts([[u64; 4]; 4]);

impl TransitionCounts {
    pub fn bump(&mut self, from: OnuState, to: OnuState) {
        self.0[state_index(from)][state_index(to)] += 1;
    }

    pub fn count(&self, from: OnuState, to: OnuState) -> u64 {
        self.0[state_index(from)][state_index(to)]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    /// Completed sleep cycles: every return to `off` closes one.
    pub fn sleep_cycles(&self) -> u64 {
        self.count(OnuState::On, OnuState::Off)
    }
}

fn state_index(s: OnuState) -> usize {
    match s {
        OnuState::Off => 0,
        OnuState::Wait => 1,
        OnuState::Trans => 2,
        OnuState::On => 3,
    }
}

/// Streaming per-run statistics built straight from the record stream.
///
/// Attach it as (part of) the engine's trace sink; when the closing `end`
/// record arrives, every figure is final. An optional warm-up window
/// excludes the start of the run from occupancy and delay figures (frame
/// counters stay whole-run so conservation checks remain exact).
pub struct RunCollector {
    power: PowerProfile,
    warmup: SimTime,
    state: OnuState,
    since: SimTime,
    times: StateTimes,
    delays_ns: Vec<u64>,
    frames_in: u64,
    frames_out: u64,
    violations: Vec<(SimTime, String)>,
    transitions: TransitionCounts,
    end_at: Option<SimTime>,
}

/// Everything [`RunCollector`] measured about one run.
#[derive(Debug, Clone)]
pub struct CollectedRun {
    pub state_times: StateTimes,
    pub power_pct: f64,
    pub delay: DelaySummary,
    pub frames_in: u64,
    pub frames_out: u64,
    pub transitions: TransitionCounts,
    pub violations: Vec<(SimTime, String)>,
    pub end_at: SimTime,
}

impl RunCollector {
    pub fn new(power: PowerProfile, warmup: SimTime) -> Self {
        RunCollector {
            power,
            warmup,
            state: OnuState::Off,
            since: SimTime::ZERO,
            times: StateTimes::default(),
            delays_ns: Vec::new(),
            frames_in: 0,
            frames_out: 0,
            violations: Vec::new(),
            transitions: TransitionCounts::default(),
            end_at: None,
        }
    }

    /// Credits the span since the last state change to the current state,
    /// clipped to the post-warm-up window.
    fn credit(&mut self, until: SimTime) {
        let from = self.since.max(self.warmup);
        if until > from {
            self.times.add(self.state, until - from);
        }
        self.since = until;
    }

    pub fn finish(mut self) -> CollectedRun {
        let end_at = self
            .end_at
            .expect("run ended without the closing record; was run_until executed?");
        let power_pct = self.times.power_pct(&self.power);
        let delay = delay_stats(&mut self.delays_ns);
        CollectedRun {
            state_times: self.times,
            power_pct,
            delay,
            frames_in: self.frames_in,
            frames_out: self.frames_out,
            transitions: self.transitions,
            violations: self.violations,
            end_at,
        }
    }
}

impl TraceSink for RunCollector {
    fn record(&mut self, rec: &TraceRecord) {
        match rec {
            TraceRecord::State { time, from, to } => {
                self.credit(*time);
                debug_assert_eq!(*from, self.state, "state records out of sequence");
                self.transitions.bump(*from, *to);
                self.state = *to;
            }
            TraceRecord::TxComplete { time, arrival, .. } => {
                self.frames_out += 1;
                if *time >= self.warmup {
                    self.delays_ns.push((*time - *arrival).as_ns());
                }
            }
            TraceRecord::Arrival { .. } => self.frames_in += 1,
            TraceRecord::Violation { time, rule, .. } => {
                self.violations.push((*time, (*rule).to_string()));
            }
            TraceRecord::End { time } => {
                self.credit(*time);
                self.end_at = Some(*time);
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(off_s: f64, wait_s: f64, trans_s: f64, on_s: f64) -> StateTimes {
        StateTimes {
            off: SimTime::from_secs_f64(off_s),
            wait: SimTime::from_secs_f64(wait_s),
            trans: SimTime::from_secs_f64(trans_s),
            on: SimTime::from_secs_f64(on_s),
        }
    }

    #[test]
    fn occupancy_partitions_the_run_exactly() {
        // off [0,40) s, wait [40,41), trans [41,44.5), on [44.5,100).
        let t = times(40.0, 1.0, 3.5, 55.5);
        assert_eq!(t.total(), SimTime::from_secs(100));
        assert_eq!(t.off, SimTime::from_secs(40));
        assert_eq!(t.trans, SimTime::from_ms(3_500));
        assert_eq!(t.on, SimTime::from_ms(55_500));
    }

    #[test]
    fn power_endpoints_and_midpoint() {
        let p = PowerProfile::default();
        assert_eq!(times(0.0, 0.0, 0.0, 100.0).power_pct(&p), 100.0);
        assert!((times(100.0, 0.0, 0.0, 0.0).power_pct(&p) - 10.0).abs() < 1e-12);
        // Half the time powered, half sleeping: 55% of always-on.
        let half = times(30.0, 20.0, 10.0, 40.0);
        assert!((half.power_pct(&p) - 55.0).abs() < 1e-12);
    }

    #[test]
    fn power_grows_with_powered_time() {
        let p = PowerProfile::default();
        let less = times(60.0, 0.0, 5.0, 35.0);
        let more = times(50.0, 0.0, 5.0, 45.0);
        assert!(less.power_pct(&p) < more.power_pct(&p));
    }

    #[test]
    fn ideal_curve_interpolates_floor_to_full() {
        let p = PowerProfile::default();
        assert!((p.floor_pct() - 10.0).abs() < 1e-12);
        assert!((p.ideal_pct(0.0) - 10.0).abs() < 1e-12);
        assert!((p.ideal_pct(0.5) - 55.0).abs() < 1e-12);
        assert!((p.ideal_pct(1.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn delay_mean_and_nearest_rank_p95() {
        let ms = 1_000_000u64;
        let mut one = vec![5 * ms];
        let s = delay_stats(&mut one);
        assert_eq!(s.count, 1);
        assert!((s.mean_ms - 5.0).abs() < 1e-12);

        let mut four = vec![2 * ms, 4 * ms, ms, 3 * ms];
        let s = delay_stats(&mut four);
        assert!((s.mean_ms - 2.5).abs() < 1e-12);
        // Nearest rank: ceil(0.95 * 4) = 4th smallest.
        assert!((s.p95_ms - 4.0).abs() < 1e-12);

        let mut twenty: Vec<u64> = (1..=20).map(|k| k * ms).collect();
        let s = delay_stats(&mut twenty);
        assert!((s.p95_ms - 19.0).abs() < 1e-12, "ceil(0.95*20) = 19th");
    }

    #[test]
    fn empty_delays_are_flagged_not_faked() {
        let s = delay_stats(&mut []);
        assert_eq!(s.count, 0);
        assert!(s.mean_ms.is_nan() && s.p95_ms.is_nan());
    }

    #[test]
    fn two_sample_interval_uses_one_degree_of_freedom() {
        let a = aggregate(&[54.0, 56.0]);
        assert!((a.mean - 55.0).abs() < 1e-12);
        // Sample std = sqrt(2); standard error = 1; t(0.975, 1 dof).
        assert!((a.ci95 - 12.7062047364).abs() < 1e-6, "got {}", a.ci95);
    }

    #[test]
    fn identical_replicates_have_zero_halfwidth() {
        let a = aggregate(&[42.0; 10]);
        assert_eq!(a.mean, 42.0);
        assert!(a.ci95.abs() < 1e-12);
    }

    #[test]
    fn aggregation_ignores_sample_order() {
        let fwd = aggregate(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let rev = aggregate(&[5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(fwd, rev);
    }

    #[test]
    fn collector_reconstructs_occupancy_delays_and_counts() {
        use crate::onu::OnuState::*;
        let mut c = RunCollector::new(PowerProfile::default(), SimTime::ZERO);
        let s = |t: u64, from, to| TraceRecord::State {
            time: SimTime::from_secs(t),
            from,
            to,
        };
        c.record(&s(40, Off, Wait));
        c.record(&s(41, Wait, Trans));
        c.record(&TraceRecord::Arrival {
            time: SimTime::from_secs(42),
            frame_id: 0,
            size_bytes: 1_500,
        });
        c.record(&s(44, Trans, On));
        c.record(&TraceRecord::TxComplete {
            time: SimTime::from_secs(45),
            frame_id: 0,
            size_bytes: 1_500,
            arrival: SimTime::from_secs(42),
        });
        c.record(&TraceRecord::End {
            time: SimTime::from_secs(100),
        });
        let out = c.finish();
        assert_eq!(out.state_times.off, SimTime::from_secs(40));
        assert_eq!(out.state_times.wait, SimTime::from_secs(1));
        assert_eq!(out.state_times.trans, SimTime::from_secs(3));
        assert_eq!(out.state_times.on, SimTime::from_secs(56));
        assert_eq!(out.frames_in, 1);
        assert_eq!(out.frames_out, 1);
        assert_eq!(out.delay.count, 1);
        assert!((out.delay.mean_ms - 3_000.0).abs() < 1e-9);
        assert_eq!(out.transitions.count(Off, Wait), 1);
        assert_eq!(out.transitions.total(), 3);
    }

    #[test]
    fn warmup_window_is_excluded_from_occupancy_and_delays() {
        use crate::onu::OnuState::*;
        let mut c = RunCollector::new(PowerProfile::default(), SimTime::from_secs(10));
        c.record(&TraceRecord::State {
            time: SimTime::from_secs(4),
            from: Off,
            to: Wait,
        });
        // Completed before the warm-up boundary: not a delay sample.
        c.record(&TraceRecord::TxComplete {
            time: SimTime::from_secs(5),
            frame_id: 0,
            size_bytes: 1_500,
            arrival: SimTime::from_secs(1),
        });
        c.record(&TraceRecord::State {
            time: SimTime::from_secs(30),
            from: Wait,
            to: Trans,
        });
        c.record(&TraceRecord::End {
            time: SimTime::from_secs(40),
        });
        let out = c.finish();
        assert_eq!(out.state_times.off, SimTime::ZERO, "fully inside warm-up");
        assert_eq!(out.state_times.wait, SimTime::from_secs(20), "clipped at 10 s");
        assert_eq!(out.state_times.trans, SimTime::from_secs(10));
        assert_eq!(out.state_times.total(), SimTime::from_secs(30));
        assert_eq!(out.delay.count, 0);
        assert_eq!(out.frames_out, 1, "conservation counters stay whole-run");
    }
}
