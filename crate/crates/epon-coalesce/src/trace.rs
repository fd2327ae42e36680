//! Run traces: the serialized record of everything a simulation did.
//!
//! Every executed event and every state change is appended to the trace in
//! timestamp order. The text form is line-delimited, one record per line,
//! `<time_ns> <kind> <fields...>` with space-separated fields:
//!
//! ```text
//! <t> cycle <index>                          DBA cycle boundary
//! <t> gate <cycle> <report_ns> <data_ns> <grant_bytes>
//! <t> report <queue_bytes>                   upstream report transmitted
//! <t> data_slot <grant_bytes> <frames> <bytes>
//! <t> arrival <frame_id> <size_bytes>
//! <t> tx <frame_id> <size_bytes> <arrival_ns>  frame fully serialized
//! <t> timer <poweron|keepalive>
//! <t> state <from> <to>                      ONU state change
//! <t> violation <rule> <detail...>
//! <t> end
//! ```
//!
//! The format is stable: re-running a configuration with the same seed
//! reproduces the byte-identical dump, so traces can be diffed, archived,
//! and checked by the independent rule checker in [`crate::validate`],
//! which consumes only this text form.

use std::fmt;
use std::io::{self, Write};

use crate::onu::OnuState;
use crate::time::SimTime;

/// One line of a run trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceRecord {
    /// Start of DBA cycle `index`.
    Cycle { time: SimTime, index: u64 },
    /// Gate delivered downstream: schedule for cycle `cycle_index`.
    Gate {
        time: SimTime,
        cycle_index: u64,
        report_at: SimTime,
        data_at: SimTime,
        grant_bytes: u64,
    },
    /// The ONU transmitted a queue-occupancy report.
    Report { time: SimTime, queue_bytes: u64 },
    /// A granted data slot opened; `frames`/`bytes` summarize what was sent.
    DataSlot {
        time: SimTime,
        grant_bytes: u64,
        frames: u32,
        bytes: u64,
    },
    /// A frame joined the upstream queue.
    Arrival {
        time: SimTime,
        frame_id: u64,
        size_bytes: u32,
    },
    /// A frame finished serializing onto the line at `time`.
    TxComplete {
        time: SimTime,
        frame_id: u64,
        size_bytes: u32,
        arrival: SimTime,
    },
    /// A sleep-logic timer fired.
    Timer { time: SimTime, kind: TimerLabel },
    /// The ONU moved between sleep states.
    State {
        time: SimTime,
        from: OnuState,
        to: OnuState,
    },
    /// A protocol rule was broken (recorded, simulation continues).
    Violation {
        time: SimTime,
        rule: &'static str,
        detail: String,
    },
    /// End of run; nothing after this instant is simulated.
    End { time: SimTime },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerLabel {
    PowerOn,
    Keepalive,
}

impl fmt::Display for TimerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimerLabel::PowerOn => write!(f, "poweron"),
            TimerLabel::Keepalive => write!(f, "keepalive"),
        }
    }
}

impl TraceRecord {
    pub fn time(&self) -> SimTime {
        match self {
            TraceRecord::Cycle { time, .. }
            | TraceRecord::Gate { time, .. }
            | TraceRecord::Report { time, .. }
            | TraceRecord::DataSlot { time, .. }
            | TraceRecord::Arrival { time, .. }
            | TraceRecord::TxComplete { time, .. }
            | TraceRecord::Timer { time, .. }
            | TraceRecord::State { time, .. }
            | TraceRecord::Violation { time, .. }
            | TraceRecord::End { time } => *time,
        }
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceRecord::Cycle { time, index } => write!(f, "{time} cycle {index}"),
            TraceRecord::Gate {
                time,
                cycle_index,
                report_at,
                data_at,
                grant_bytes,
            } => write!(f, "{time} gate {cycle_index} {report_at} {data_at} {grant_bytes}"),
            TraceRecord::Report { time, queue_bytes } => {
                write!(f, "{time} report {queue_bytes}")
            }
            TraceRecord::DataSlot {
                time,
                grant_bytes,
                frames,
                bytes,
            } => write!(f, "{time} data_slot {grant_bytes} {frames} {bytes}"),
            TraceRecord::Arrival {
                time,
                frame_id,
                size_bytes,
            } => write!(f, "{time} arrival {frame_id} {size_bytes}"),
            TraceRecord::TxComplete {
                time,
                frame_id,
                size_bytes,
                arrival,
            } => write!(f, "{time} tx {frame_id} {size_bytes} {arrival}"),
            TraceRecord::Timer { time, kind } => write!(f, "{time} timer {kind}"),
            TraceRecord::State { time, from, to } => write!(f, "{time} state {from} {to}"),
            TraceRecord::Violation { time, rule, detail } => {
                write!(f, "{time} violation {rule} {detail}")
            }
            TraceRecord::End { time } => write!(f, "{time} end"),
        }
    }
}

/// Receives trace records as the simulation emits them.
///
/// Sinks are deliberately dumb append targets; anything that wants to
/// aggregate (metrics collection, streaming validation, file dumps) builds
/// on this one method.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

/// Discards every record.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _rec: &TraceRecord) {}
}

/// Keeps every record in memory, in emission order.
#[derive(Default)]
pub struct VecSink {
    pub records: Vec<TraceRecord>,
}

impl VecSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Renders the retained records as the canonical text dump.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }
}

impl TraceSink for VecSink {
    fn record(&mut self, rec: &TraceRecord) {
        self.records.push(rec.clone());
    }
}

/// Streams the text form of each record to a writer.
pub struct WriteSink<W: Write> {
    writer: W,
    pub errored: Option<io::Error>,
}

impl<W: Write> WriteSink<W> {
    pub fn new(writer: W) -> Self {
        Self {
            writer,
            errored: None,
        }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> TraceSink for WriteSink<W> {
    fn record(&mut self, rec: &TraceRecord) {
        if self.errored.is_none() {
            if let Err(e) = writeln!(self.writer, "{rec}") {
                self.errored = Some(e);
            }
        }
    }
}

/// Forwards every record to both wrapped sinks.
pub struct TeeSink<'a> {
    pub first: &'a mut dyn TraceSink,
    pub second: &'a mut dyn TraceSink,
}

impl TraceSink for TeeSink<'_> {
    fn record(&mut self, rec: &TraceRecord) {
        self.first.record(rec);
        self.second.record(rec);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_is_stable() {
        let lines = [
            TraceRecord::Cycle {
                time: SimTime::from_ms(3),
                index: 2,
            }
            .to_string(),
            TraceRecord::Gate {
                time: SimTime::from_ns(2_250_000),
                cycle_index: 2,
                report_at: SimTime::from_ms(3),
                data_at: SimTime::from_ns(3_000_052),
                grant_bytes: 37_500,
            }
            .to_string(),
            TraceRecord::State {
                time: SimTime::from_ns(1_000_000),
                from: OnuState::Wait,
                to: OnuState::Trans,
            }
            .to_string(),
            TraceRecord::TxComplete {
                time: SimTime::from_ns(3_001_252),
                frame_id: 0,
                size_bytes: 1_500,
                arrival: SimTime::from_ns(42),
            }
            .to_string(),
        ];
        assert_eq!(lines[0], "3000000 cycle 2");
        assert_eq!(lines[1], "2250000 gate 2 3000000 3000052 37500");
        assert_eq!(lines[2], "1000000 state wait trans");
        assert_eq!(lines[3], "3001252 tx 0 1500 42");
    }

    #[test]
    fn vec_sink_renders_one_line_per_record() {
        let mut sink = VecSink::new();
        sink.record(&TraceRecord::End {
            time: SimTime::from_secs(1),
        });
        assert_eq!(sink.to_text(), "1000000000 end\n");
    }
}
