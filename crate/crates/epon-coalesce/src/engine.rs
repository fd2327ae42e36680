//! Deterministic discrete-event core: clock, queue, dispatch loop.
//!
//! Events are totally ordered by `(time, class, seq)`. The class ranks
//! simultaneous events so that administrative work always settles before
//! traffic: a cycle boundary first, then gate delivery, then the report
//! slot, then data-slot activity, then frame arrivals, then sleep timers.
//! `seq` is a monotonically increasing schedule counter, so two events are
//! never equal and the execution order is a pure function of the schedule
//! calls — which is what makes whole runs reproducible byte for byte.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::time::SimTime;
use crate::trace::{TraceRecord, TraceSink};

/// Tie-break rank for events sharing a timestamp. Lower runs first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventClass {
    CycleBoundary,
    GateDelivery,
    ReportSlot,
    DataSlotBoundary,
    FrameArrival,
    Timer,
}

/// What an event means to the model when it fires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventPayload {
    /// Start of DBA cycle `index`; reschedules itself each cycle.
    CycleBoundary { index: u64 },
    /// Compose and deliver the gate for `cycle_index` (sent mid-cycle).
    GateDue { cycle_index: u64 },
    /// The ONU's granted report instant.
    ReportSlot,
    /// A granted data slot opens, good for up to `grant_bytes`.
    DataSlotOpen { grant_bytes: u64 },
    /// A frame from the traffic source reaches the upstream queue.
    FrameArrival,
    /// A queued frame finishes serializing onto the line.
    TxComplete {
        frame_id: u64,
        size_bytes: u32,
        arrival: SimTime,
    },
    /// WAIT-state timer: begin powering the transmitter.
    PowerOnTimer,
    /// OFF-state timer: wake to refresh the report deadline.
    KeepaliveTimer,
}

/// Identity of a scheduled event; lets the scheduler cancel it later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedEvent {
    pub time: SimTime,
    pub class: EventClass,
    pub seq: u64,
}

struct QueuedEvent {
    ev: TimedEvent,
    payload: EventPayload,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.ev == other.ev
    }
}

impl Eq for QueuedEvent {}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the earliest event pops first.
        (other.ev.time, other.ev.class, other.ev.seq).cmp(&(
            self.ev.time,
            self.ev.class,
            self.ev.seq,
        ))
    }
}

/// The model half of a simulation: reacts to events, may schedule more.
pub trait World {
    fn handle(&mut self, ev: TimedEvent, payload: EventPayload, eng: &mut Engine<'_>);
}

/// Event queue plus clock. Borrows its trace sink for the duration of a run.
pub struct Engine<'a> {
    clock: SimTime,
    heap: BinaryHeap<QueuedEvent>,
    live: HashSet<u64>,
    next_seq: u64,
    executed: u64,
    sink: &'a mut dyn TraceSink,
}

impl<'a> Engine<'a> {
    pub fn new(sink: &'a mut dyn TraceSink) -> Self {
        Engine {
            clock: SimTime::ZERO,
            heap: BinaryHeap::new(),
            live: HashSet::new(),
            next_seq: 0,
            executed: 0,
            sink,
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    /// Number of events dispatched so far.
    pub fn executed(&self) -> u64 {
        self.executed
    }

    /// Queues `payload` at `time`. Panics if `time` is already in the past:
    /// that is always a scheduling bug, never a recoverable condition.
    pub fn schedule(
        &mut self,
        time: SimTime,
        class: EventClass,
        payload: EventPayload,
    ) -> EventHandle {
        assert!(
            time >= self.clock,
            "scheduled an event at {time} ns with the clock already at {} ns",
            self.clock
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.live.insert(seq);
        self.heap.push(QueuedEvent {
            ev: TimedEvent { time, class, seq },
            payload,
        });
        EventHandle(seq)
    }

    /// Revokes a pending event. Returns `false` if it already fired or was
    /// cancelled before — both are fine to ignore.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.live.remove(&handle.0)
    }

    /// Appends a record to the run trace.
    pub fn emit(&mut self, rec: TraceRecord) {
        self.sink.record(&rec);
    }

    /// Dispatches every live event with `time <= t_end` in order, advances
    /// the clock to `t_end`, and emits the closing `end` record.
    pub fn run_until<W: World>(&mut self, world: &mut W, t_end: SimTime) {
        while let Some(head) = self.heap.peek() {
            if head.ev.time > t_end {
                break;
            }
            let QueuedEvent { ev, payload } = self.heap.pop().unwrap();
            if !self.live.remove(&ev.seq) {
                continue; // cancelled while queued
            }
            debug_assert!(ev.time >= self.clock, "event queue went backwards");
            self.clock = ev.time;
            self.executed += 1;
            world.handle(ev, payload, self);
        }
        self.clock = t_end;
        self.emit(TraceRecord::End { time: t_end });
    }
}
