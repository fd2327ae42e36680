//! Discrete-event simulator of an EPON upstream channel whose ONU sleeps
//! its transmitter between packet-coalesced bursts.
//!
//! The model: an OLT runs a fixed-length DBA cycle, granting the ONU one
//! report slot and one data slot per cycle, sized from the previous
//! cycle's queue report and capped at the per-ONU bandwidth. The ONU
//! powers its transmitter down whenever the queue is drained, coalesces
//! arrivals until they reach a threshold `q_w` (or a keepalive deadline
//! looms), then powers up just in time for the next granted report slot.
//! The interesting output is the tradeoff this buys: transmitter energy
//! versus added packet delay.
//!
//! Crate layout:
//!
//! * [`time`] — integer-nanosecond clock and serialization arithmetic.
//! * [`engine`] — deterministic event queue with a total event order.
//! * [`trace`] — the line-oriented record stream every run emits.
//! * [`traffic`] — seeded Pareto interarrival source at a target load.
//! * [`mpcp`] — OLT side: cycles, gates, grants, liveness watchdog.
//! * [`onu`] — the sleep automaton (off/wait/trans/on) as pure logic.
//! * [`run`] — wiring of all of the above into one executable run.
//! * [`metrics`] — occupancy, power, delay, cross-seed aggregation.
//! * [`validate`] — independent streaming re-checker of trace files.
//! * [`config`] — `key = value` experiment configuration.
//! * [`experiment`] — sweep planning, parallel execution, CSV/plot data.

pub mod config;
pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod mpcp;
pub mod onu;
pub mod run;
pub mod time;
pub mod trace;
pub mod traffic;
pub mod validate;

pub use config::ExperimentConfig;
pub use metrics::{aggregate, delay_stats, DelaySummary, PowerProfile, StateTimes};
pub use mpcp::{DbaConfig, GateMessage, Olt, ReportMessage};
pub use onu::{OnuContext, OnuState, SleepConfig};
pub use run::{run, run_with_sink, RunConfig, RunResult};
pub use time::{serialization_ns, SimTime};
pub use trace::{TraceRecord, TraceSink, VecSink, WriteSink};
pub use traffic::{Frame, ParetoSource, TrafficConfig};
pub use validate::{validate_reader, validate_text, ValidationReport, Validator, ValidatorConfig};
