//! One simulated channel: OLT schedule, sleeping ONU, traffic, plumbing.
//!
//! This module owns the event wiring between the pure pieces:
//!
//! * Cycle boundaries re-arm themselves, deliver mid-cycle gates, promote
//!   a stabilized transmitter into operation, and poll the OLT watchdog.
//! * Gates always reach the ONU (the downstream receiver never sleeps),
//!   but only a powered ONU turns them into report/data-slot events — a
//!   sleeping transmitter cannot use a slot, and grants engendered by its
//!   final pre-sleep report go idle by design.
//! * The power-on timer schedules exactly one report event for the slot
//!   the wake-up aimed at; gates arriving while powered schedule each
//!   following report. `pending_report_at` de-duplicates the overlap when
//!   a gate announces the very slot a wake-up already targets.
//! * Frames leave the queue when their data slot opens; their trace
//!   records appear at serialization end, so the trace stays time-sorted.
//!
//! [`run`] executes a configuration to completion and reduces the trace to
//! a [`RunResult`] on the fly; [`run_with_sink`] additionally streams every
//! record to a caller-supplied sink (file dump, validator, ...).

use crate::engine::{Engine, EventClass, EventHandle, EventPayload, TimedEvent, World};
use crate::metrics::{CollectedRun, DelaySummary, PowerProfile, RunCollector, StateTimes, TransitionCounts};
use crate::mpcp::{DbaConfig, Olt, OltFault, ReportMessage};
use crate::onu::{Action, OnuContext, OnuState, SleepConfig, TimerKind};
use crate::time::{serialization_ns, SimTime};
use crate::trace::{NullSink, TeeSink, TimerLabel, TraceRecord, TraceSink};
use crate::traffic::{Frame, ParetoSource, TrafficConfig};

/// Everything one simulation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dba: DbaConfig,
    pub sleep: SleepConfig,
    pub traffic: TrafficConfig,
    pub power: PowerProfile,
    /// Line rate at which granted bytes serialize (distinct from the far
    /// smaller per-ONU bandwidth that defines offered load).
    pub nominal_bps: u64,
    pub duration: SimTime,
    /// Initial window excluded from occupancy/delay statistics.
    pub warmup: SimTime,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dba: DbaConfig::default(),
            sleep: SleepConfig::default(),
            traffic: TrafficConfig::default(),
            power: PowerProfile::default(),
            nominal_bps: 10_000_000_000,
            duration: SimTime::from_secs(100),
            warmup: SimTime::ZERO,
        }
    }
}

/// Figures of merit for one completed run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub state_times: StateTimes,
    pub power_pct: f64,
    pub delay: DelaySummary,
    pub frames_in: u64,
    pub frames_out: u64,
    /// Frames still in the system at the end instant: queued plus those
    /// mid-serialization. `frames_in = frames_out + frames_pending_end`.
    pub frames_pending_end: u64,
    pub transitions: TransitionCounts,
    pub violations: Vec<(SimTime, String)>,
    pub events: u64,
}

/// The live model: reacts to engine events, emits trace records.
pub struct ChannelWorld {
    pub dba: DbaConfig,
    pub olt: Olt,
    pub onu: OnuContext,
    source: ParetoSource,
    frame_bytes: u32,
    nominal_bps: u64,
    next_frame_id: u64,
    keepalive: Option<EventHandle>,
    poweron: Option<EventHandle>,
    /// Report event already queued for this instant, if any. Gates and
    /// power-on wake-ups can both name the same slot; only one event may
    /// exist for it.
    pending_report_at: Option<SimTime>,
    pub frames_in: u64,
    pub frames_tx_scheduled: u64,
    pub frames_tx_done: u64,
}

impl ChannelWorld {
    pub fn new(cfg: &RunConfig) -> Self {
        ChannelWorld {
            dba: cfg.dba,
            olt: Olt::new(cfg.dba),
            onu: OnuContext::new(cfg.sleep),
            source: ParetoSource::new(&cfg.traffic),
            frame_bytes: cfg.traffic.frame_bytes,
            nominal_bps: cfg.nominal_bps,
            next_frame_id: 0,
            keepalive: None,
            poweron: None,
            pending_report_at: None,
            frames_in: 0,
            frames_tx_scheduled: 0,
            frames_tx_done: 0,
        }
    }

    /// Emits a state record if `before` differs from the current state.
    fn note_state(&mut self, before: OnuState, eng: &mut Engine<'_>) {
        let after = self.onu.state;
        if after != before {
            eng.emit(TraceRecord::State {
                time: eng.now(),
                from: before,
                to: after,
            });
        }
    }

    /// Queues the report event for `at` unless one is already pending.
    fn schedule_report(&mut self, at: SimTime, eng: &mut Engine<'_>) {
        if self.pending_report_at != Some(at) {
            eng.schedule(at, EventClass::ReportSlot, EventPayload::ReportSlot);
            self.pending_report_at = Some(at);
        }
    }

    /// Executes automaton side effects. Transmissions are handled at the
    /// data-slot site, where the grant is in scope.
    fn apply(&mut self, actions: Vec<Action>, eng: &mut Engine<'_>) {
        for action in actions {
            match action {
                Action::SendReport { queue_bytes } => {
                    let now = eng.now();
                    eng.emit(TraceRecord::Report {
                        time: now,
                        queue_bytes,
                    });
                    let report = ReportMessage {
                        sent_at: now,
                        queue_bytes,
                    };
                    if let Some(fault) = self.olt.on_report(report, now) {
                        let rule = match fault {
                            OltFault::DuplicateReport => "duplicate-report",
                            OltFault::ReportOutsideSlot => "report-outside-slot",
                        };
                        eng.emit(TraceRecord::Violation {
                            time: now,
                            rule,
                            detail: format!("queue_bytes={queue_bytes}"),
                        });
                    }
                }
                Action::ArmTimer {
                    at,
                    kind: TimerKind::PowerOn,
                } => {
                    self.poweron =
                        Some(eng.schedule(at, EventClass::Timer, EventPayload::PowerOnTimer));
                }
                Action::ArmTimer {
                    at,
                    kind: TimerKind::Keepalive,
                } => {
                    self.keepalive =
                        Some(eng.schedule(at, EventClass::Timer, EventPayload::KeepaliveTimer));
                }
                Action::CancelTimer { kind } => {
                    let handle = match kind {
                        TimerKind::PowerOn => self.poweron.take(),
                        TimerKind::Keepalive => self.keepalive.take(),
                    };
                    if let Some(handle) = handle {
                        eng.cancel(handle);
                    }
                }
                // State records (emitted via note_state) already carry the
                // power switching; transmissions never reach here.
                Action::PowerOnTransmitter | Action::PowerOffTransmitter => {}
                Action::TransmitFrames { .. } => {
                    unreachable!("transmissions are produced by data slots only")
                }
            }
        }
    }

    fn on_cycle_boundary(&mut self, index: u64, eng: &mut Engine<'_>) {
        let now = eng.now();
        eng.emit(TraceRecord::Cycle { time: now, index });
        let before = self.onu.state;
        self.onu.try_enter_on(now);
        self.note_state(before, eng);
        self.olt.begin_cycle();
        if self.olt.watchdog_poll(now).is_some() {
            let silent = now.saturating_sub(self.olt.last_report_at());
            eng.emit(TraceRecord::Violation {
                time: now,
                rule: "report-cadence",
                detail: format!("onu silent for {silent} ns"),
            });
        }
        // The gate composes this cycle's report into next cycle's grant,
        // so it is delivered midway between this ONU's report slot and
        // the next cycle boundary — strictly after the report it
        // summarizes, strictly before the cycle it provisions.
        let offset = self.dba.slot_offset.as_ns();
        let gate_at = now + SimTime(offset + (self.dba.cycle_len.as_ns() - offset) / 2);
        eng.schedule(
            gate_at,
            EventClass::GateDelivery,
            EventPayload::GateDue {
                cycle_index: index + 1,
            },
        );
        eng.schedule(
            now + self.dba.cycle_len,
            EventClass::CycleBoundary,
            EventPayload::CycleBoundary { index: index + 1 },
        );
    }

    fn on_gate_due(&mut self, cycle_index: u64, eng: &mut Engine<'_>) {
        let gate = self.olt.make_gate(cycle_index);
        eng.emit(TraceRecord::Gate {
            time: eng.now(),
            cycle_index,
            report_at: gate.report_time,
            data_at: gate.data_slot_start,
            grant_bytes: gate.data_grant_bytes,
        });
        self.onu.observe_gate(gate);
        if self.onu.state.transmitter_powered() {
            self.schedule_report(gate.report_time, eng);
            if gate.data_grant_bytes > 0 {
                eng.schedule(
                    gate.data_slot_start,
                    EventClass::DataSlotBoundary,
                    EventPayload::DataSlotOpen {
                        grant_bytes: gate.data_grant_bytes,
                    },
                );
            }
        }
    }

    fn on_report_slot(&mut self, eng: &mut Engine<'_>) {
        self.pending_report_at = None;
        debug_assert!(
            self.onu.state.transmitter_powered(),
            "report event reached an unpowered ONU"
        );
        if !self.onu.state.transmitter_powered() {
            return;
        }
        let before = self.onu.state;
        let actions = self.onu.on_report_slot(eng.now(), &self.dba);
        self.apply(actions, eng);
        self.note_state(before, eng);
    }

    fn on_data_slot(&mut self, grant_bytes: u64, eng: &mut Engine<'_>) {
        let now = eng.now();
        if self.onu.state != OnuState::On {
            // The slot was granted before the ONU went back to sleep (the
            // grant lags the report by a cycle); it opens unused.
            eng.emit(TraceRecord::DataSlot {
                time: now,
                grant_bytes,
                frames: 0,
                bytes: 0,
            });
            return;
        }
        let actions = self.onu.on_data_slot(grant_bytes, now);
        for action in actions {
            let Action::TransmitFrames { frames } = action else {
                unreachable!("data slots only transmit");
            };
            let bytes: u64 = frames.iter().map(|f| u64::from(f.size_bytes)).sum();
            eng.emit(TraceRecord::DataSlot {
                time: now,
                grant_bytes,
                frames: frames.len() as u32,
                bytes,
            });
            let mut finish = now;
            for frame in frames {
                finish += serialization_ns(u64::from(frame.size_bytes), self.nominal_bps);
                self.frames_tx_scheduled += 1;
                eng.schedule(
                    finish,
                    EventClass::Timer,
                    EventPayload::TxComplete {
                        frame_id: frame.id,
                        size_bytes: frame.size_bytes,
                        arrival: frame.arrival,
                    },
                );
            }
        }
    }

    fn on_frame_arrival(&mut self, eng: &mut Engine<'_>) {
        let now = eng.now();
        let frame = Frame {
            id: self.next_frame_id,
            size_bytes: self.frame_bytes,
            arrival: now,
            departure: None,
        };
        self.next_frame_id += 1;
        self.frames_in += 1;
        eng.emit(TraceRecord::Arrival {
            time: now,
            frame_id: frame.id,
            size_bytes: frame.size_bytes,
        });
        let before = self.onu.state;
        let actions = self.onu.on_frame_arrival(frame, now, &self.dba);
        self.apply(actions, eng);
        self.note_state(before, eng);
        let gap = self.source.next_interarrival();
        eng.schedule(now + gap, EventClass::FrameArrival, EventPayload::FrameArrival);
    }

    fn on_poweron_timer(&mut self, eng: &mut Engine<'_>) {
        self.poweron = None;
        eng.emit(TraceRecord::Timer {
            time: eng.now(),
            kind: TimerLabel::PowerOn,
        });
        let before = self.onu.state;
        let actions = self.onu.on_poweron_timer(eng.now());
        self.apply(actions, eng);
        self.note_state(before, eng);
        let target = self
            .onu
            .target_report_at
            .expect("power-on fired without a target report slot");
        self.schedule_report(target, eng);
    }

    fn on_keepalive_timer(&mut self, eng: &mut Engine<'_>) {
        self.keepalive = None;
        eng.emit(TraceRecord::Timer {
            time: eng.now(),
            kind: TimerLabel::Keepalive,
        });
        let before = self.onu.state;
        let actions = self.onu.on_keepalive_timer(eng.now(), &self.dba);
        self.apply(actions, eng);
        self.note_state(before, eng);
    }

    fn on_tx_complete(&mut self, frame_id: u64, size_bytes: u32, arrival: SimTime, eng: &mut Engine<'_>) {
        self.frames_tx_done += 1;
        eng.emit(TraceRecord::TxComplete {
            time: eng.now(),
            frame_id,
            size_bytes,
            arrival,
        });
    }
}

impl World for ChannelWorld {
    fn handle(&mut self, _ev: TimedEvent, payload: EventPayload, eng: &mut Engine<'_>) {
        match payload {
            EventPayload::CycleBoundary { index } => self.on_cycle_boundary(index, eng),
            EventPayload::GateDue { cycle_index } => self.on_gate_due(cycle_index, eng),
            EventPayload::ReportSlot => self.on_report_slot(eng),
            EventPayload::DataSlotOpen { grant_bytes } => self.on_data_slot(grant_bytes, eng),
            EventPayload::FrameArrival => self.on_frame_arrival(eng),
            EventPayload::PowerOnTimer => self.on_poweron_timer(eng),
            EventPayload::KeepaliveTimer => self.on_keepalive_timer(eng),
            EventPayload::TxComplete {
                frame_id,
                size_bytes,
                arrival,
            } => self.on_tx_complete(frame_id, size_bytes, arrival, eng),
        }
    }
}

/// Runs one simulation, discarding the trace and keeping the statistics.
pub fn run(cfg: &RunConfig) -> RunResult {
    let mut devnull = NullSink;
    run_with_sink(cfg, &mut devnull)
}

/// Runs one simulation, streaming every trace record to `extra` while the
/// statistics collector consumes the same stream.
pub fn run_with_sink(cfg: &RunConfig, extra: &mut dyn TraceSink) -> RunResult {
    let mut collector = RunCollector::new(cfg.power, cfg.warmup);
    let mut world = ChannelWorld::new(cfg);
    let events;
    {
        let mut tee = TeeSink {
            first: &mut collector,
            second: extra,
        };
        let mut eng = Engine::new(&mut tee);
        eng.schedule(
            SimTime::ZERO,
            EventClass::CycleBoundary,
            EventPayload::CycleBoundary { index: 0 },
        );
        let first_gap = world.source.next_interarrival();
        eng.schedule(first_gap, EventClass::FrameArrival, EventPayload::FrameArrival);
        // Registration counts as contact at t = 0; the keepalive clock
        // starts there, exactly as it will after every later report.
        let keepalive_at = cfg.dba.report_deadline - cfg.sleep.wake_lead;
        world.keepalive = Some(eng.schedule(
            keepalive_at,
            EventClass::Timer,
            EventPayload::KeepaliveTimer,
        ));
        eng.run_until(&mut world, cfg.duration);
        events = eng.executed();
    }
    let collected: CollectedRun = collector.finish();
    debug_assert_eq!(collected.frames_in, world.frames_in);
    debug_assert_eq!(collected.frames_out, world.frames_tx_done);
    let in_flight = world.frames_tx_scheduled - world.frames_tx_done;
    RunResult {
        state_times: collected.state_times,
        power_pct: collected.power_pct,
        delay: collected.delay,
        frames_in: world.frames_in,
        frames_out: world.frames_tx_done,
        frames_pending_end: world.onu.queue.len() as u64 + in_flight,
        transitions: collected.transitions,
        violations: collected.violations,
        events,
    }
}
