//! ONU-side sleep automaton: coalesce arrivals while the transmitter sleeps.
//!
//! The optical transmitter is the dominant power draw, so the ONU keeps it
//! off whenever it can. The automaton cycles through four states:
//!
//! * `off`   — transmitter powered down; arrivals coalesce in the queue.
//! * `wait`  — wake-up decided, but power-on is deferred so that the
//!   transmitter becomes stable exactly at a granted report slot; the
//!   transmitter is still unpowered, so this time is as cheap as `off`.
//! * `trans` — transmitter powering on and re-synchronizing. It ends with
//!   a report in the aimed-at slot; the OLT turns that report into a data
//!   grant one cycle later, so the ONU is operational at the next cycle
//!   boundary.
//! * `on`    — normal operation: report every cycle, transmit every
//!   granted data slot.
//!
//! Two things wake a sleeping ONU: the queue reaching the coalescing
//! threshold `q_w`, or a keepalive deadline that keeps the OLT's liveness
//! watchdog satisfied even when no traffic arrives.
//!
//! The ONU goes back to sleep after the first report that shows the queue
//! below `q_w` once a data slot has drained it. Frames that trickle in
//! between that draining slot and the report deliberately do not keep the
//! transmitter up: they are carried over and coalesce with the next burst.
//!
//! State is mutated here; side effects (timers, transmissions, reports)
//! are returned as [`Action`] values for the event loop to execute.

use std::collections::VecDeque;
use std::fmt;

use crate::mpcp::{DbaConfig, GateMessage};
use crate::time::SimTime;
use crate::traffic::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OnuState {
    Off,
    Wait,
    Trans,
    On,
}

impl OnuState {
    pub fn name(self) -> &'static str {
        match self {
            OnuState::Off => "off",
            OnuState::Wait => "wait",
            OnuState::Trans => "trans",
            OnuState::On => "on",
        }
    }

    /// True while the transmitter draws full power.
    pub fn transmitter_powered(self) -> bool {
        matches!(self, OnuState::Trans | OnuState::On)
    }
}

impl fmt::Display for OnuState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sleep/wake policy knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SleepConfig {
    /// Queue length (frames) that triggers a wake-up.
    pub q_w: usize,
    /// Transmitter power-on plus resynchronization time.
    pub delta_on: SimTime,
    /// How far before the report deadline the keepalive wake-up fires.
    /// Must cover `delta_on` plus one cycle of slot-alignment slack, or
    /// the post-wake report can land after the deadline.
    pub wake_lead: SimTime,
}

impl Default for SleepConfig {
    fn default() -> Self {
        SleepConfig {
            q_w: 10,
            delta_on: SimTime::from_ms(2),
            // delta_on + one default cycle length.
            wake_lead: SimTime::from_us(3_500),
        }
    }
}

/// Timers the automaton arms; the event loop owns the actual events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimerKind {
    /// Fires at the instant the transmitter must begin powering on.
    PowerOn,
    /// Fires when a sleeping ONU must wake to keep its liveness contract.
    Keepalive,
}

/// Side effects requested by a state-machine step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    PowerOnTransmitter,
    PowerOffTransmitter,
    SendReport { queue_bytes: u64 },
    TransmitFrames { frames: Vec<Frame> },
    ArmTimer { at: SimTime, kind: TimerKind },
    CancelTimer { kind: TimerKind },
}

/// A wake-up schedule: power on at `poweron_at` so the transmitter is
/// stable exactly at the granted slot `report_at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WakePlan {
    pub poweron_at: SimTime,
    pub report_at: SimTime,
}

/// The sleep decision at a queue-status report: coalescing continues only
/// while the backlog stays below the wake threshold.
pub fn should_sleep(queue_len: usize, q_w: usize) -> bool {
    queue_len < q_w
}

/// Full ONU state: automaton phase, frame queue, and timer bookkeeping.
#[derive(Debug, Clone)]
pub struct OnuContext {
    pub cfg: SleepConfig,
    pub state: OnuState,
    pub queue: VecDeque<Frame>,
    pub queue_bytes: u64,
    /// Last report instant; starts at 0, the registration handshake.
    pub last_report_sent: SimTime,
    pub last_gate: Option<GateMessage>,
    /// Pending power-on instant while in `wait`.
    pub poweron_at: Option<SimTime>,
    /// The report slot the current wake-up is aimed at.
    pub target_report_at: Option<SimTime>,
    /// Set once a data slot (or an idle `on` entry) leaves the queue
    /// drained; the next report then decides whether to sleep.
    pub awaiting_final_report: bool,
    /// While in `trans`: the cycle boundary at which operation resumes.
    pub on_entry_due: Option<SimTime>,
    pub state_entered_at: SimTime,
}

impl OnuContext {
    pub fn new(cfg: SleepConfig) -> Self {
        OnuContext {
            cfg,
            state: OnuState::Off,
            queue: VecDeque::new(),
            queue_bytes: 0,
            last_report_sent: SimTime::ZERO,
            last_gate: None,
            poweron_at: None,
            target_report_at: None,
            awaiting_final_report: false,
            on_entry_due: None,
            state_entered_at: SimTime::ZERO,
        }
    }

    fn set_state(&mut self, to: OnuState, now: SimTime) {
        self.state = to;
        self.state_entered_at = now;
    }

    /// Schedules the wake-up: the earliest granted report slot the
    /// transmitter can be stable for, and the power-on instant that hits
    /// it exactly (no early power-on, no missed slot).
    pub fn wake_plan(&self, now: SimTime, dba: &DbaConfig) -> WakePlan {
        let report_at = dba.next_report_slot(now + self.cfg.delta_on);
        WakePlan {
            poweron_at: report_at - self.cfg.delta_on,
            report_at,
        }
    }

    fn begin_wait(&mut self, now: SimTime, dba: &DbaConfig, actions: &mut Vec<Action>) {
        let plan = self.wake_plan(now, dba);
        self.set_state(OnuState::Wait, now);
        self.poweron_at = Some(plan.poweron_at);
        self.target_report_at = Some(plan.report_at);
        actions.push(Action::ArmTimer {
            at: plan.poweron_at,
            kind: TimerKind::PowerOn,
        });
    }

    /// A frame joined the queue. Only a sleeping ONU reacts: reaching the
    /// wake threshold starts the power-on schedule and the keepalive timer
    /// becomes moot.
    pub fn on_frame_arrival(&mut self, frame: Frame, now: SimTime, dba: &DbaConfig) -> Vec<Action> {
        self.queue_bytes += u64::from(frame.size_bytes);
        self.queue.push_back(frame);
        let mut actions = Vec::new();
        if self.state == OnuState::Off && self.queue.len() >= self.cfg.q_w {
            actions.push(Action::CancelTimer {
                kind: TimerKind::Keepalive,
            });
            self.begin_wait(now, dba, &mut actions);
        }
        actions
    }

    /// The keepalive deadline expired with the queue still short: wake
    /// anyway so the next report lands before the liveness deadline.
    pub fn on_keepalive_timer(&mut self, now: SimTime, dba: &DbaConfig) -> Vec<Action> {
        assert_eq!(
            self.state,
            OnuState::Off,
            "keepalive timer fired in state {}; it must be cancelled on wake",
            self.state
        );
        let mut actions = Vec::new();
        self.begin_wait(now, dba, &mut actions);
        actions
    }

    /// The power-on instant arrived: the transmitter starts stabilizing
    /// and will be ready exactly at the aimed-at report slot.
    pub fn on_poweron_timer(&mut self, now: SimTime) -> Vec<Action> {
        assert_eq!(
            self.state,
            OnuState::Wait,
            "power-on timer fired in state {}",
            self.state
        );
        debug_assert_eq!(self.poweron_at, Some(now));
        self.set_state(OnuState::Trans, now);
        self.poweron_at = None;
        vec![Action::PowerOnTransmitter]
    }

    /// A granted report slot while the transmitter is powered. Reports the
    /// current backlog; freshly awoken ONUs schedule their return to
    /// operation, and a drained ONU decides whether to go back to sleep.
    pub fn on_report_slot(&mut self, now: SimTime, dba: &DbaConfig) -> Vec<Action> {
        assert!(
            self.state.transmitter_powered(),
            "report slot in state {}: an unpowered transmitter cannot send",
            self.state
        );
        self.last_report_sent = now;
        let mut actions = vec![Action::SendReport {
            queue_bytes: self.queue_bytes,
        }];
        match self.state {
            OnuState::Trans => {
                // The grant bred by this report arrives with the next
                // cycle; rejoin normal operation at that boundary.
                self.on_entry_due = Some(dba.cycle_start(dba.cycle_index_at(now) + 1));
                self.target_report_at = None;
            }
            OnuState::On if self.awaiting_final_report => {
                if should_sleep(self.queue.len(), self.cfg.q_w) {
                    // Back to sleep. Any stragglers queued since the
                    // draining slot coalesce with the next burst.
                    self.awaiting_final_report = false;
                    self.set_state(OnuState::Off, now);
                    actions.push(Action::PowerOffTransmitter);
                    actions.push(Action::ArmTimer {
                        at: now + dba.report_deadline - self.cfg.wake_lead,
                        kind: TimerKind::Keepalive,
                    });
                } else {
                    // The queue refilled past the threshold before the
                    // final report: stay up and keep transmitting.
                    self.awaiting_final_report = false;
                }
            }
            _ => {}
        }
        actions
    }

    /// The cycle boundary at which a freshly transmitting ONU becomes
    /// operational. Returns false if that boundary has not arrived yet.
    pub fn try_enter_on(&mut self, now: SimTime) -> bool {
        match (self.state, self.on_entry_due) {
            (OnuState::Trans, Some(due)) if now >= due => {
                self.on_entry_due = None;
                self.set_state(OnuState::On, now);
                // A keepalive wake with no traffic has nothing to send:
                // the very next report puts the ONU straight back to bed.
                if self.queue.is_empty() {
                    self.awaiting_final_report = true;
                }
                true
            }
            _ => false,
        }
    }

    /// A granted data slot opened. Transmits the longest queue prefix
    /// that fits the grant; frames never jump the FIFO order.
    pub fn on_data_slot(&mut self, grant_bytes: u64, _now: SimTime) -> Vec<Action> {
        assert_eq!(
            self.state,
            OnuState::On,
            "data slot in state {}: only an operational ONU transmits data",
            self.state
        );
        let mut frames = Vec::new();
        let mut taken = 0u64;
        while let Some(front) = self.queue.front() {
            let size = u64::from(front.size_bytes);
            if taken + size > grant_bytes {
                break;
            }
            taken += size;
            let frame = self.queue.pop_front().expect("front exists");
            self.queue_bytes -= u64::from(frame.size_bytes);
            frames.push(frame);
        }
        self.awaiting_final_report = self.queue.is_empty();
        vec![Action::TransmitFrames { frames }]
    }

    /// Every downstream gate is remembered; whether it also schedules
    /// events depends on the power state and is the event loop's call.
    pub fn observe_gate(&mut self, gate: GateMessage) {
        self.last_gate = Some(gate);
    }
}
