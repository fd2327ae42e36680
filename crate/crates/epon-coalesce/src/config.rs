//! Experiment configuration: defaults, flat `key = value` files, and
//! command-line overrides, merged in that order.
//!
//! A configuration describes a full sweep — the load points, the wake
//! thresholds, how many seeded repetitions to run, and the shared channel
//! parameters — and can mint the per-run [`RunConfig`] for any
//! (load, threshold, seed) triple.

use std::path::Path;

use thiserror::Error;

use crate::metrics::PowerProfile;
use crate::mpcp::DbaConfig;
use crate::onu::SleepConfig;
use crate::run::RunConfig;
use crate::time::SimTime;
use crate::traffic::TrafficConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("configuration rejected: {0}")]
    Constraint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything a sweep needs. Field defaults reproduce the reference
/// operating point: 1.5 ms cycles, 2 ms power-on, 10:1 power ratio,
/// 1500-byte frames at α = 2.5, eighteen loads × thresholds {1, 10, 100}
/// × 10 seeds × 100 s.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dba: DbaConfig,
    pub sleep: SleepConfig,
    pub traffic: TrafficConfig,
    pub power: PowerProfile,
    /// Line rate used for frame serialization timing.
    pub nominal_bps: u64,
    /// Offered loads ρ, each relative to the per-ONU bandwidth.
    pub loads: Vec<f64>,
    /// Wake thresholds q_w to sweep.
    pub q_ws: Vec<usize>,
    /// Number of seeded repetitions per (load, q_w) point.
    pub seeds: u32,
    /// Root of the per-run seed derivation.
    pub base_seed: u64,
    pub duration: SimTime,
    pub warmup: SimTime,
    /// True once `onu.wake_lead_ns` was given explicitly; otherwise the
    /// lead re-derives as δ_ON + cycle length when either changes.
    wake_lead_explicit: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dba: DbaConfig::default(),
            sleep: SleepConfig::default(),
            traffic: TrafficConfig::default(),
            power: PowerProfile::default(),
            nominal_bps: 10_000_000_000,
            loads: (1..=18).map(|i| f64::from(i) / 20.0).collect(),
            q_ws: vec![1, 10, 100],
            seeds: 10,
            base_seed: 1,
            duration: SimTime::from_secs(100),
            warmup: SimTime::ZERO,
            wake_lead_explicit: false,
        }
    }
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Invalid {
        key: key.to_string(),
        reason: e.to_string(),
    })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(key, s))
        .collect()
}

impl ExperimentConfig {
    /// Reads a config file and layers it over the current values.
    pub fn apply_path(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)?;
        self.apply_file(&text)
    }

    /// Layers `key = value` lines over the current values. `#` starts a
    /// comment; later entries override earlier ones.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    text: raw.to_string(),
                });
            };
            self.apply_entry(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one parameter. Command-line overrides call this after the
    /// file has been applied, which is what gives flags precedence.
    pub fn apply_entry(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let invalid = |reason: &str| ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        match key {
            "traffic.alpha" => self.traffic.alpha = parse_scalar(key, value)?,
            "traffic.frame_bytes" => self.traffic.frame_bytes = parse_scalar(key, value)?,
            "traffic.rate_bps" => self.traffic.rate_bps = parse_scalar(key, value)?,
            "dba.cycle_len_ns" => {
                self.dba.cycle_len = SimTime(parse_scalar(key, value)?);
                self.rederive_wake_lead();
            }
            "dba.cap_bytes" => self.dba.cap_bytes_per_cycle = parse_scalar(key, value)?,
            "dba.report_duration_ns" => {
                self.dba.report_duration = SimTime(parse_scalar(key, value)?)
            }
            "dba.report_deadline_ns" => {
                self.dba.report_deadline = SimTime(parse_scalar(key, value)?)
            }
            "dba.slot_offset_ns" => self.dba.slot_offset = SimTime(parse_scalar(key, value)?),
            "onu.q_w" => {
                let list: Vec<usize> = parse_list(key, value)?;
                if list.is_empty() {
                    return Err(invalid("needs at least one threshold"));
                }
                if list.contains(&0) {
                    return Err(invalid("q_w must be at least 1 frame"));
                }
                self.sleep.q_w = list[0];
                self.q_ws = list;
            }
            "onu.delta_on_ns" => {
                self.sleep.delta_on = SimTime(parse_scalar(key, value)?);
                self.rederive_wake_lead();
            }
            "onu.wake_lead_ns" => {
                self.sleep.wake_lead = SimTime(parse_scalar(key, value)?);
                self.wake_lead_explicit = true;
            }
            "power.p_on" => self.power.p_on = parse_scalar(key, value)?,
            "power.p_off" => self.power.p_off = parse_scalar(key, value)?,
            "link.nominal_bps" => self.nominal_bps = parse_scalar(key, value)?,
            "run.loads" => {
                let list: Vec<f64> = parse_list(key, value)?;
                if list.is_empty() {
                    return Err(invalid("needs at least one load"));
                }
                self.loads = list;
            }
            "run.seeds" => self.seeds = parse_scalar(key, value)?,
            "run.base_seed" => self.base_seed = parse_scalar(key, value)?,
            "run.duration_s" => {
                let secs: f64 = parse_scalar(key, value)?;
                if !secs.is_finite() || secs <= 0.0 {
                    return Err(invalid("duration must be positive seconds"));
                }
                self.duration = SimTime::from_secs_f64(secs);
            }
            "run.warmup_s" => {
                let secs: f64 = parse_scalar(key, value)?;
                if !secs.is_finite() || secs < 0.0 {
                    return Err(invalid("warmup must be non-negative seconds"));
                }
                self.warmup = SimTime::from_secs_f64(secs);
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    fn rederive_wake_lead(&mut self) {
        if !self.wake_lead_explicit {
            self.sleep.wake_lead = self.sleep.delta_on + self.dba.cycle_len;
        }
    }

    /// Cross-field checks, run once the file and flags are merged.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Constraint(msg));
        if self.loads.is_empty() || self.q_ws.is_empty() {
            return bad("need at least one load and one q_w".into());
        }
        for &load in &self.loads {
            if !(load > 0.0 && load <= 1.0) {
                return bad(format!("load {load} outside (0, 1]"));
            }
        }
        if self.q_ws.contains(&0) {
            return bad("q_w must be at least 1 frame".into());
        }
        if self.seeds == 0 {
            return bad("need at least one seed".into());
        }
        if !self.traffic.alpha.is_finite() || self.traffic.alpha <= 1.0 {
            return bad(format!(
                "traffic.alpha {} needs alpha > 1 for a finite mean",
                self.traffic.alpha
            ));
        }
        if self.traffic.frame_bytes == 0 || self.traffic.rate_bps == 0 || self.nominal_bps == 0 {
            return bad("frame size and bit rates must be positive".into());
        }
        if u64::from(self.traffic.frame_bytes) > self.dba.cap_bytes_per_cycle {
            return bad(format!(
                "frame of {} bytes can never fit the {}-byte cycle cap",
                self.traffic.frame_bytes, self.dba.cap_bytes_per_cycle
            ));
        }
        if !(self.power.p_on > self.power.p_off && self.power.p_off > 0.0) {
            return bad(format!(
                "power profile needs p_on > p_off > 0, got {} and {}",
                self.power.p_on, self.power.p_off
            ));
        }
        if self.dba.cycle_len == SimTime::ZERO {
            return bad("cycle length must be positive".into());
        }
        if self.dba.slot_offset >= self.dba.cycle_len {
            return bad(format!(
                "slot offset {} must stay inside the {} cycle",
                self.dba.slot_offset, self.dba.cycle_len
            ));
        }
        if self.sleep.wake_lead > self.dba.report_deadline {
            return bad(format!(
                "wake lead {} exceeds the report deadline {}",
                self.sleep.wake_lead, self.dba.report_deadline
            ));
        }
        if self.duration == SimTime::ZERO {
            return bad("duration must be positive".into());
        }
        if self.warmup >= self.duration {
            return bad(format!(
                "warmup {} leaves nothing of the {} run",
                self.warmup, self.duration
            ));
        }
        Ok(())
    }

    /// The single-run configuration for one sweep point.
    pub fn run_config(&self, load: f64, q_w: usize, seed: u64) -> RunConfig {
        RunConfig {
            dba: self.dba,
            sleep: SleepConfig {
                q_w,
                ..self.sleep
            },
            traffic: TrafficConfig {
                load,
                seed,
                ..self.traffic
            },
            power: self.power,
            nominal_bps: self.nominal_bps,
            duration: self.duration,
            warmup: self.warmup,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_keeps_reference_defaults() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.dba.cycle_len, SimTime::from_ms(1) + SimTime::from_us(500));
        assert_eq!(cfg.sleep.delta_on, SimTime::from_ms(2));
        assert_eq!(cfg.sleep.q_w, 10);
        assert_eq!(cfg.traffic.alpha, 2.5);
        assert_eq!(cfg.traffic.frame_bytes, 1500);
        assert_eq!(cfg.power.p_on / cfg.power.p_off, 10.0);
        assert_eq!(cfg.loads.len(), 18);
        assert_eq!(cfg.q_ws, vec![1, 10, 100]);
        assert_eq!(cfg.seeds, 10);
        assert_eq!(cfg.duration, SimTime::from_secs(100));
    }

    #[test]
    fn zero_threshold_is_rejected_by_name() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.apply_file("onu.q_w = 0").unwrap_err();
        assert!(err.to_string().contains("onu.q_w"), "{err}");
        assert!(err.to_string().contains("at least 1"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.apply_file("onu.qw_typo = 3").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(ref k) if k == "onu.qw_typo"), "{err}");
    }

    #[test]
    fn later_entries_override_earlier_ones() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("run.loads = 0.5\nrun.loads = 0.7").unwrap();
        assert_eq!(cfg.loads, vec![0.7]);
        // A flag applied after the file wins the same way.
        cfg.apply_entry("run.loads", "0.3").unwrap();
        assert_eq!(cfg.loads, vec![0.3]);
    }

    #[test]
    fn comments_blanks_and_spacing_are_tolerated() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file(
            "# full-line comment\n\n  run.seeds = 3   # trailing comment\n\tonu.q_w = 1, 10 ,100\n",
        )
        .unwrap();
        assert_eq!(cfg.seeds, 3);
        assert_eq!(cfg.q_ws, vec![1, 10, 100]);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.apply_file("run.seeds = 3\nthis is not a setting\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn wake_lead_follows_poweron_and_cycle_until_set_explicitly() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("onu.delta_on_ns = 1000000").unwrap();
        assert_eq!(cfg.sleep.wake_lead, SimTime(2_500_000));
        cfg.apply_file("dba.cycle_len_ns = 2000000").unwrap();
        assert_eq!(cfg.sleep.wake_lead, SimTime(3_000_000));

        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("onu.wake_lead_ns = 4000000\nonu.delta_on_ns = 1000000")
            .unwrap();
        assert_eq!(cfg.sleep.wake_lead, SimTime(4_000_000));
    }

    #[test]
    fn cross_field_constraints_are_enforced() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("onu.wake_lead_ns = 60000000").unwrap();
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("power.p_off = 2.0").unwrap();
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("run.loads = 1.5").unwrap();
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("run.warmup_s = 100").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn durations_parse_as_seconds() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("run.duration_s = 2.5\nrun.warmup_s = 0.25").unwrap();
        assert_eq!(cfg.duration, SimTime(2_500_000_000));
        assert_eq!(cfg.warmup, SimTime(250_000_000));
    }

    #[test]
    fn run_config_assembles_the_requested_point() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_file("run.duration_s = 5").unwrap();
        let rc = cfg.run_config(0.3, 7, 99);
        assert_eq!(rc.traffic.load, 0.3);
        assert_eq!(rc.traffic.seed, 99);
        assert_eq!(rc.sleep.q_w, 7);
        assert_eq!(rc.duration, SimTime::from_secs(5));
        assert_eq!(rc.dba, cfg.dba);
    }
}
