//! OLT-side MPCP scheduling: fixed DBA cycles, gates, reports, watchdog.
//!
//! The channel runs on a fixed-length DBA cycle. Each cycle grants the ONU
//! one report slot (at the cycle start, plus a configurable offset) and
//! one data slot immediately after it. Mid-cycle the OLT composes the gate
//! for the *next* cycle: the data grant equals the queue occupancy the ONU
//! reported in the *current* cycle, clamped to the per-cycle capacity cap.
//! No report this cycle means no data grant next cycle.
//!
//! The OLT also runs a liveness watchdog: an ONU silent for strictly more
//! than `report_deadline` counts as disconnected. A healthy sleep schedule
//! never trips it; runs configured to wake too late record the violation
//! in the trace and carry on.

use crate::time::SimTime;

/// Fixed parameters of the upstream schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DbaConfig {
    /// DBA cycle length.
    pub cycle_len: SimTime,
    /// Largest data grant a single cycle may carry.
    pub cap_bytes_per_cycle: u64,
    /// Time reserved for the report transmission itself.
    pub report_duration: SimTime,
    /// Silence longer than this (strictly) disconnects the ONU.
    pub report_deadline: SimTime,
    /// Offset of this ONU's report slot from the cycle start. Staggering
    /// several ONUs over one cycle is just a matter of giving each its own
    /// offset; a single tagged ONU uses 0.
    pub slot_offset: SimTime,
}

impl Default for DbaConfig {
    fn default() -> Self {
        DbaConfig {
            cycle_len: SimTime::from_us(1_500),
            // 200 Mb/s of available upstream bandwidth over one 1.5 ms
            // cycle: 37,500 bytes, i.e. twenty-five 1500-byte frames.
            cap_bytes_per_cycle: 37_500,
            report_duration: SimTime::from_ns(52),
            report_deadline: SimTime::from_ms(50),
            slot_offset: SimTime::ZERO,
        }
    }
}

impl DbaConfig {
    /// Start instant of cycle `index`.
    pub fn cycle_start(&self, index: u64) -> SimTime {
        SimTime(index * self.cycle_len.as_ns())
    }

    /// This ONU's granted report instant within cycle `index`.
    pub fn report_slot(&self, index: u64) -> SimTime {
        self.cycle_start(index) + self.slot_offset
    }

    /// Opening instant of the data slot that follows the report.
    pub fn data_slot(&self, index: u64) -> SimTime {
        self.report_slot(index) + self.report_duration
    }

    /// Index of the cycle containing `t`.
    pub fn cycle_index_at(&self, t: SimTime) -> u64 {
        t.as_ns() / self.cycle_len.as_ns()
    }

    /// Earliest granted report slot at or after `t`.
    pub fn next_report_slot(&self, t: SimTime) -> SimTime {
        let len = self.cycle_len.as_ns();
        let t_rel = t.as_ns().saturating_sub(self.slot_offset.as_ns());
        SimTime(t_rel.div_ceil(len) * len) + self.slot_offset
    }
}

/// Downstream schedule announcement for one upcoming cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateMessage {
    pub cycle_index: u64,
    pub report_time: SimTime,
    pub data_slot_start: SimTime,
    pub data_grant_bytes: u64,
}

/// Upstream queue-occupancy announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportMessage {
    pub sent_at: SimTime,
    pub queue_bytes: u64,
}

/// Grant for the cycle after a report: everything asked for, up to the cap.
/// `None` (the ONU slept through its slot) grants nothing.
pub fn grant_for(report: Option<&ReportMessage>, cap_bytes: u64) -> u64 {
    report.map_or(0, |r| r.queue_bytes.min(cap_bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WatchdogStatus {
    Connected,
    Disconnected,
}

/// What the OLT remembers about its one tagged ONU.
#[derive(Debug, Clone)]
pub struct Olt {
    pub cfg: DbaConfig,
    /// Report received in the cycle currently under way, if any.
    report_this_cycle: Option<ReportMessage>,
    /// When the ONU was last heard from. A fresh OLT treats registration
    /// (t = 0) as the last contact.
    last_report_at: SimTime,
    /// Set while the watchdog has already flagged the current silence, so
    /// one outage is reported once rather than every cycle.
    disconnect_flagged: bool,
}

/// Protocol faults the OLT can observe on its upstream receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OltFault {
    /// Two reports in one cycle: the second is bogus.
    DuplicateReport,
    /// A report landed outside the granted slot.
    ReportOutsideSlot,
}

impl Olt {
    pub fn new(cfg: DbaConfig) -> Self {
        Olt {
            cfg,
            report_this_cycle: None,
            last_report_at: SimTime::ZERO,
            disconnect_flagged: false,
        }
    }

    /// Cycle housekeeping: forget the now-consumed report.
    pub fn begin_cycle(&mut self) {
        self.report_this_cycle = None;
    }

    /// Composes the gate for `cycle_index` from whatever the ONU reported
    /// in the cycle now under way.
    pub fn make_gate(&self, cycle_index: u64) -> GateMessage {
        GateMessage {
            cycle_index,
            report_time: self.cfg.report_slot(cycle_index),
            data_slot_start: self.cfg.data_slot(cycle_index),
            data_grant_bytes: grant_for(
                self.report_this_cycle.as_ref(),
                self.cfg.cap_bytes_per_cycle,
            ),
        }
    }

    /// Accepts an upstream report. Returns a fault if it is malformed with
    /// respect to the granted schedule; the report still refreshes the
    /// liveness clock either way (the ONU is clearly alive).
    pub fn on_report(&mut self, report: ReportMessage, now: SimTime) -> Option<OltFault> {
        self.last_report_at = now;
        self.disconnect_flagged = false;
        let slot_start = self.cfg.report_slot(self.cfg.cycle_index_at(now));
        let slot_end = slot_start + self.cfg.report_duration;
        let fault = if self.report_this_cycle.is_some() {
            Some(OltFault::DuplicateReport)
        } else if now < slot_start || now > slot_end {
            Some(OltFault::ReportOutsideSlot)
        } else {
            None
        };
        if fault.is_none() {
            self.report_this_cycle = Some(report);
        }
        fault
    }

    /// Liveness check; the deadline is exclusive, so silence of exactly
    /// `report_deadline` still counts as connected.
    pub fn watchdog_check(&self, now: SimTime) -> WatchdogStatus {
        if now.saturating_sub(self.last_report_at) > self.cfg.report_deadline {
            WatchdogStatus::Disconnected
        } else {
            WatchdogStatus::Connected
        }
    }

    /// As `watchdog_check`, but reports each outage only once.
    pub fn watchdog_poll(&mut self, now: SimTime) -> Option<WatchdogStatus> {
        match self.watchdog_check(now) {
            WatchdogStatus::Disconnected if !self.disconnect_flagged => {
                self.disconnect_flagged = true;
                Some(WatchdogStatus::Disconnected)
            }
            _ => None,
        }
    }

    pub fn last_report_at(&self) -> SimTime {
        self.last_report_at
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn olt() -> Olt {
        Olt::new(DbaConfig::default())
    }

    #[test]
    fn cycle_start_instants() {
        let cfg = DbaConfig::default();
        assert_eq!(cfg.cycle_start(0), SimTime::ZERO);
        assert_eq!(cfg.cycle_start(2), SimTime::from_ms(3));
        // A 100 s run covers 66,666 full cycles plus change; cycle 40,000
        // begins at the one-minute mark.
        assert_eq!(cfg.cycle_start(40_000), SimTime::from_secs(60));
    }

    #[test]
    fn next_report_slot_rounds_up_to_a_cycle_start() {
        let cfg = DbaConfig::default();
        assert_eq!(cfg.next_report_slot(SimTime::ZERO), SimTime::ZERO);
        assert_eq!(cfg.next_report_slot(SimTime::from_us(1)), SimTime::from_us(1_500));
        assert_eq!(
            cfg.next_report_slot(SimTime::from_us(1_500)),
            SimTime::from_us(1_500)
        );
        assert_eq!(
            cfg.next_report_slot(SimTime::from_us(2_200)),
            SimTime::from_us(3_000)
        );
    }

    #[test]
    fn staggered_offset_shifts_the_slots() {
        let cfg = DbaConfig {
            slot_offset: SimTime::from_us(30),
            ..DbaConfig::default()
        };
        assert_eq!(cfg.report_slot(2), SimTime::from_us(3_030));
        assert_eq!(cfg.data_slot(2), SimTime::from_ns(3_030_052));
        assert_eq!(cfg.next_report_slot(SimTime::from_us(10)), SimTime::from_us(30));
        assert_eq!(cfg.next_report_slot(SimTime::from_us(31)), SimTime::from_us(1_530));
    }

    #[test]
    fn grant_is_the_report_clamped_to_the_cap() {
        let big = ReportMessage {
            sent_at: SimTime::ZERO,
            queue_bytes: 100_000,
        };
        let small = ReportMessage {
            sent_at: SimTime::ZERO,
            queue_bytes: 1_500,
        };
        assert_eq!(grant_for(Some(&big), 37_500), 37_500);
        assert_eq!(grant_for(Some(&small), 37_500), 1_500);
        assert_eq!(grant_for(None, 37_500), 0);
    }

    #[test]
    fn gate_carries_next_cycle_schedule_and_grant() {
        let mut olt = olt();
        olt.begin_cycle();
        let fault = olt.on_report(
            ReportMessage {
                sent_at: SimTime::ZERO,
                queue_bytes: 37_500,
            },
            SimTime::ZERO,
        );
        assert_eq!(fault, None);
        let gate = olt.make_gate(1);
        assert_eq!(gate.report_time, SimTime::from_us(1_500));
        assert_eq!(gate.data_slot_start, SimTime::from_ns(1_500_052));
        assert_eq!(gate.data_grant_bytes, 37_500);
    }

    #[test]
    fn silent_cycle_grants_nothing() {
        let mut olt = olt();
        olt.begin_cycle();
        assert_eq!(olt.make_gate(1).data_grant_bytes, 0);
        // An explicit empty report also grants nothing.
        olt.on_report(
            ReportMessage {
                sent_at: SimTime::ZERO,
                queue_bytes: 0,
            },
            SimTime::ZERO,
        );
        assert_eq!(olt.make_gate(1).data_grant_bytes, 0);
    }

    #[test]
    fn second_report_in_a_cycle_is_flagged() {
        let mut olt = olt();
        olt.begin_cycle();
        let t = SimTime::from_ms(3);
        assert_eq!(
            olt.on_report(ReportMessage { sent_at: t, queue_bytes: 10 }, t),
            None
        );
        assert_eq!(
            olt.on_report(ReportMessage { sent_at: t, queue_bytes: 10 }, t),
            Some(OltFault::DuplicateReport)
        );
    }

    #[test]
    fn report_outside_the_granted_slot_is_flagged() {
        let mut olt = olt();
        olt.begin_cycle();
        let late = SimTime::from_us(700);
        assert_eq!(
            olt.on_report(
                ReportMessage {
                    sent_at: late,
                    queue_bytes: 10
                },
                late
            ),
            Some(OltFault::ReportOutsideSlot)
        );
    }

    #[test]
    fn watchdog_deadline_is_strict() {
        let olt = olt();
        assert_eq!(
            olt.watchdog_check(SimTime::from_us(49_900)),
            WatchdogStatus::Connected
        );
        assert_eq!(
            olt.watchdog_check(SimTime::from_ms(50)),
            WatchdogStatus::Connected,
            "exactly the deadline is still alive"
        );
        assert_eq!(
            olt.watchdog_check(SimTime::from_us(50_001)),
            WatchdogStatus::Disconnected
        );
    }

    #[test]
    fn watchdog_poll_reports_an_outage_once() {
        let mut olt = olt();
        assert_eq!(
            olt.watchdog_poll(SimTime::from_ms(51)),
            Some(WatchdogStatus::Disconnected)
        );
        assert_eq!(olt.watchdog_poll(SimTime::from_ms(52)), None);
        // Contact resets the flag; a later outage is reported again.
        olt.on_report(
            ReportMessage {
                sent_at: SimTime::from_us(52_500),
                queue_bytes: 0,
            },
            SimTime::from_us(52_500),
        );
        assert_eq!(
            olt.watchdog_poll(SimTime::from_us(103_000)),
            Some(WatchdogStatus::Disconnected)
        );
    }
}
