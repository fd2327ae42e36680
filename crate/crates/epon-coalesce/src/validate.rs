//! Independent re-checker of serialized run traces.
//!
//! The validator reads the line-oriented trace format — never in-memory
//! simulator objects — and re-derives every protocol and automaton rule
//! from scratch, deliberately sharing no transition code with the
//! simulator. Agreement between the two is the strongest correctness
//! evidence this crate has: the simulator must produce traces this module
//! finds clean, and seeded rule breakages must be caught.
//!
//! Checked rules, by stable identifier:
//!
//! * `state-sequence` — only off→wait→trans→on→off transitions, each
//!   record consistent with the tracked history (initial state: off).
//! * `unpowered-transmission` — no reports, data slots with payload, or
//!   frame transmissions while off/wait.
//! * `trans-data` — a stabilizing transmitter sends reports only.
//! * `grant-mismatch` — every gate's grant equals the cycle's reported
//!   queue occupancy clamped to the cap (no report → zero).
//! * `grant-exceeded` — no data slot carries more bytes than its grant,
//!   whether declared in the slot record or accumulated from
//!   transmission records; transmissions require an open slot.
//! * `report-cadence` — report-to-report gaps (and the tail gap to the
//!   end of the run) never exceed the liveness deadline. Only checked
//!   when the configured wake lead makes the guarantee possible;
//!   violation records embedded by the simulated OLT are echoed
//!   regardless.
//! * `poweron-anticipation` — each wait→trans entry is followed by a
//!   report exactly the power-on latency later, before operation resumes.
//! * `fifo-order` — transmitted frame ids strictly increase.
//! * `time-partition` — timestamps never decrease and exactly one `end`
//!   record closes the trace.
//!
//! Lines that do not parse are a hard error, not a violation: garbage in,
//! rejection out.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use thiserror::Error;

use crate::mpcp::DbaConfig;
use crate::onu::SleepConfig;
use crate::time::SimTime;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("line {line}: unreadable trace record: {text:?}")]
    Malformed { line: u64, text: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One broken rule at one instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub time: SimTime,
    pub rule: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.time, self.rule, self.detail)
    }
}

/// The few schedule facts the rules need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatorConfig {
    pub cycle_len: SimTime,
    pub cap_bytes: u64,
    pub report_deadline: SimTime,
    pub delta_on: SimTime,
    pub wake_lead: SimTime,
}

impl Default for ValidatorConfig {
    fn default() -> Self {
        ValidatorConfig::for_run(&DbaConfig::default(), &SleepConfig::default())
    }
}

impl ValidatorConfig {
    pub fn for_run(dba: &DbaConfig, sleep: &SleepConfig) -> Self {
        ValidatorConfig {
            cycle_len: dba.cycle_len,
            cap_bytes: dba.cap_bytes_per_cycle,
            report_deadline: dba.report_deadline,
            delta_on: sleep.delta_on,
            wake_lead: sleep.wake_lead,
        }
    }

    /// Report cadence is only guaranteed when the keepalive wakes early
    /// enough to cover power-on latency plus slot-alignment slack.
    pub fn cadence_checked(&self) -> bool {
        self.wake_lead >= self.delta_on + self.cycle_len
    }
}

/// Outcome of validating one trace.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub lines: u64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Violation tally per rule identifier.
    pub fn counts_by_rule(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for v in &self.violations {
            *counts.entry(v.rule.clone()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Off,
    Wait,
    Trans,
    On,
}

impl Phase {
    fn parse(token: &str) -> Option<Phase> {
        Some(match token {
            "off" => Phase::Off,
            "wait" => Phase::Wait,
            "trans" => Phase::Trans,
            "on" => Phase::On,
            _ => return None,
        })
    }

    fn powered(self) -> bool {
        matches!(self, Phase::Trans | Phase::On)
    }
}

struct SlotBudget {
    grant: u64,
    used: u64,
    flagged: bool,
}

/// Streaming rule checker; feed lines, then [`Validator::finish`].
pub struct Validator {
    cfg: ValidatorConfig,
    violations: Vec<Violation>,
    lines: u64,
    last_time: u64,
    phase: Phase,
    end_at: Option<u64>,
    /// Queue bytes reported since the last cycle record, if any.
    report_this_cycle: Option<u64>,
    last_report_at: u64,
    /// Set at wait→trans: the instant the following report must occupy.
    expected_report_at: Option<u64>,
    open_slot: Option<SlotBudget>,
    last_tx_id: Option<u64>,
}

impl Validator {
    pub fn new(cfg: ValidatorConfig) -> Self {
        Validator {
            cfg,
            violations: Vec::new(),
            lines: 0,
            last_time: 0,
            phase: Phase::Off,
            end_at: None,
            report_this_cycle: None,
            last_report_at: 0,
            expected_report_at: None,
            open_slot: None,
            last_tx_id: None,
        }
    }

    fn flag(&mut self, time: u64, rule: &str, detail: String) {
        self.violations.push(Violation {
            time: SimTime(time),
            rule: rule.to_string(),
            detail,
        });
    }

    /// Consumes one trace line (without trailing newline). Blank lines are
    /// ignored; anything else that does not parse rejects the trace.
    pub fn feed_line(&mut self, line: &str) -> Result<(), ValidateError> {
        self.lines += 1;
        let mut fields = line.split_whitespace();
        let Some(first) = fields.next() else {
            return Ok(()); // blank line
        };
        let line_no = self.lines;
        let malformed = || ValidateError::Malformed {
            line: line_no,
            text: line.to_string(),
        };
        let time: u64 = first.parse().map_err(|_| malformed())?;
        let kind = fields.next().ok_or_else(malformed)?;

        if time < self.last_time {
            self.flag(
                time,
                "time-partition",
                format!("timestamp went backwards from {}", self.last_time),
            );
        } else {
            self.last_time = time;
        }
        if self.end_at.is_some() {
            self.flag(time, "time-partition", format!("{kind} record after end"));
        }

        let num = |fields: &mut std::str::SplitWhitespace<'_>| -> Result<u64, ValidateError> {
            fields.next().ok_or_else(malformed)?.parse().map_err(|_| malformed())
        };

        match kind {
            "cycle" => {
                let _index = num(&mut fields)?;
                self.report_this_cycle = None;
            }
            "gate" => {
                let _cycle = num(&mut fields)?;
                let _report_at = num(&mut fields)?;
                let _data_at = num(&mut fields)?;
                let grant = num(&mut fields)?;
                let expected = self
                    .report_this_cycle
                    .map_or(0, |q| q.min(self.cfg.cap_bytes));
                if grant != expected {
                    self.flag(
                        time,
                        "grant-mismatch",
                        format!("grant {grant} but cycle report implies {expected}"),
                    );
                }
            }
            "report" => {
                let queue_bytes = num(&mut fields)?;
                if !self.phase.powered() {
                    self.flag(
                        time,
                        "unpowered-transmission",
                        format!("report of {queue_bytes} bytes with the transmitter unpowered"),
                    );
                }
                if let Some(expected) = self.expected_report_at.take() {
                    if time != expected {
                        self.flag(
                            time,
                            "poweron-anticipation",
                            format!("first report after power-on at {time}, expected {expected}"),
                        );
                    }
                }
                if self.cfg.cadence_checked() {
                    let gap = time.saturating_sub(self.last_report_at);
                    if gap > self.cfg.report_deadline.as_ns() {
                        self.flag(
                            time,
                            "report-cadence",
                            format!("{gap} ns since the previous report"),
                        );
                    }
                }
                self.last_report_at = time;
                self.report_this_cycle = Some(queue_bytes);
            }
            "data_slot" => {
                let grant = num(&mut fields)?;
                let frames = num(&mut fields)?;
                let bytes = num(&mut fields)?;
                let mut flagged = false;
                if bytes > grant {
                    self.flag(
                        time,
                        "grant-exceeded",
                        format!("slot declares {bytes} bytes against a {grant} byte grant"),
                    );
                    flagged = true;
                }
                if frames > 0 || bytes > 0 {
                    match self.phase {
                        Phase::Trans => self.flag(
                            time,
                            "trans-data",
                            format!("{bytes} data bytes while stabilizing"),
                        ),
                        Phase::Off | Phase::Wait => self.flag(
                            time,
                            "unpowered-transmission",
                            format!("{bytes} data bytes with the transmitter unpowered"),
                        ),
                        Phase::On => {}
                    }
                }
                self.open_slot = Some(SlotBudget {
                    grant,
                    used: 0,
                    flagged,
                });
            }
            "arrival" => {
                let _id = num(&mut fields)?;
                let _size = num(&mut fields)?;
            }
            "tx" => {
                let id = num(&mut fields)?;
                let size = num(&mut fields)?;
                let _arrival = num(&mut fields)?;
                match self.phase {
                    Phase::On => {}
                    Phase::Trans => {
                        self.flag(time, "trans-data", format!("frame {id} sent while stabilizing"))
                    }
                    Phase::Off | Phase::Wait => self.flag(
                        time,
                        "unpowered-transmission",
                        format!("frame {id} sent with the transmitter unpowered"),
                    ),
                }
                match self.open_slot.as_mut() {
                    None => self.flag(
                        time,
                        "grant-exceeded",
                        format!("frame {id} transmitted outside any granted slot"),
                    ),
                    Some(slot) => {
                        slot.used += size;
                        if slot.used > slot.grant && !slot.flagged {
                            slot.flagged = true;
                            let (used, grant) = (slot.used, slot.grant);
                            self.flag(
                                time,
                                "grant-exceeded",
                                format!("slot used {used} bytes of a {grant} byte grant"),
                            );
                        }
                    }
                }
                if let Some(last) = self.last_tx_id {
                    if id <= last {
                        self.flag(
                            time,
                            "fifo-order",
                            format!("frame {id} departed after frame {last}"),
                        );
                    }
                }
                self.last_tx_id = Some(id);
            }
            "timer" => {
                let _kind = fields.next().ok_or_else(malformed)?;
            }
            "state" => {
                let from = Phase::parse(fields.next().ok_or_else(malformed)?).ok_or_else(malformed)?;
                let to = Phase::parse(fields.next().ok_or_else(malformed)?).ok_or_else(malformed)?;
                if from != self.phase {
                    self.flag(
                        time,
                        "state-sequence",
                        format!("record leaves {from:?} but the ONU was in {:?}", self.phase),
                    );
                }
                let legal = matches!(
                    (from, to),
                    (Phase::Off, Phase::Wait)
                        | (Phase::Wait, Phase::Trans)
                        | (Phase::Trans, Phase::On)
                        | (Phase::On, Phase::Off)
                ) || from == to;
                if !legal {
                    self.flag(time, "state-sequence", format!("illegal move {from:?}->{to:?}"));
                }
                if (from, to) == (Phase::Wait, Phase::Trans) {
                    self.expected_report_at = Some(time + self.cfg.delta_on.as_ns());
                }
                if (from, to) == (Phase::Trans, Phase::On) {
                    if let Some(expected) = self.expected_report_at.take() {
                        self.flag(
                            time,
                            "poweron-anticipation",
                            format!("operation resumed without the report due at {expected}"),
                        );
                    }
                }
                self.phase = to;
            }
            "violation" => {
                // The simulator noticed a protocol fault itself; echo it.
                let rule = fields.next().ok_or_else(malformed)?.to_string();
                let detail: Vec<&str> = fields.collect();
                self.violations.push(Violation {
                    time: SimTime(time),
                    rule,
                    detail: detail.join(" "),
                });
                return Ok(());
            }
            "end" => {
                if self.end_at.is_some() {
                    self.flag(time, "time-partition", "duplicate end record".to_string());
                } else {
                    self.end_at = Some(time);
                }
            }
            _ => return Err(malformed()),
        }
        // Any unconsumed trailing fields mean the line is not the format
        // it claims to be.
        if fields.next().is_some() {
            return Err(malformed());
        }
        Ok(())
    }

    /// Closes the trace: end-of-input checks, then the report.
    pub fn finish(mut self) -> ValidationReport {
        match self.end_at {
            None => {
                let t = self.last_time;
                self.flag(t, "time-partition", "trace has no end record".to_string());
            }
            Some(end) => {
                if self.cfg.cadence_checked() {
                    let gap = end.saturating_sub(self.last_report_at);
                    if gap > self.cfg.report_deadline.as_ns() {
                        self.flag(
                            end,
                            "report-cadence",
                            format!("{gap} ns from the final report to the end of the run"),
                        );
                    }
                }
            }
        }
        ValidationReport {
            violations: self.violations,
            lines: self.lines,
        }
    }
}

/// Validates a complete trace held in memory.
pub fn validate_text(text: &str, cfg: ValidatorConfig) -> Result<ValidationReport, ValidateError> {
    let mut v = Validator::new(cfg);
    for line in text.lines() {
        v.feed_line(line)?;
    }
    Ok(v.finish())
}

/// Validates a trace streamed from a reader (e.g. a dump file).
pub fn validate_reader<R: BufRead>(
    reader: R,
    cfg: ValidatorConfig,
) -> Result<ValidationReport, ValidateError> {
    let mut v = Validator::new(cfg);
    for line in reader.lines() {
        v.feed_line(&line?)?;
    }
    Ok(v.finish())
}

/// Trace sink that validates records as the simulation emits them, via
/// their serialized form, so live runs and dumped files get byte-for-byte
/// identical scrutiny.
pub struct ValidatingSink {
    validator: Option<Validator>,
    error: Option<ValidateError>,
}

impl ValidatingSink {
    pub fn new(cfg: ValidatorConfig) -> Self {
        ValidatingSink {
            validator: Some(Validator::new(cfg)),
            error: None,
        }
    }

    pub fn into_report(mut self) -> Result<ValidationReport, ValidateError> {
        if let Some(err) = self.error.take() {
            return Err(err);
        }
        Ok(self.validator.take().expect("validator present").finish())
    }
}

impl crate::trace::TraceSink for ValidatingSink {
    fn record(&mut self, rec: &crate::trace::TraceRecord) {
        if self.error.is_some() {
            return;
        }
        if let Some(v) = self.validator.as_mut() {
            if let Err(e) = v.feed_line(&rec.to_string()) {
                self.error = Some(e);
            }
        }
    }
}
