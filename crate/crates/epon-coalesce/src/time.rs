//! Simulation clock: absolute instants in integer nanoseconds.
//!
//! Every duration of interest here (cycle length 1.5 ms, power-up latency
//! 2 ms, frame serialization 1.2 us, report slot 52 ns) is an exact number
//! of nanoseconds, so the whole simulation runs on `u64` arithmetic and
//! state-occupancy totals add up without rounding error.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// An absolute simulation instant (or a span) in nanoseconds since t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_ns(ns: u64) -> Self {
        SimTime(ns)
    }

    pub fn from_us(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    /// Rounds to the nearest nanosecond; negative values are clamped to 0.
    pub fn from_secs_f64(s: f64) -> Self {
        SimTime((s * 1e9).round().max(0.0) as u64)
    }

    pub fn as_ns(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    /// Difference that tolerates either operand being larger.
    pub fn abs_diff(self, other: SimTime) -> SimTime {
        SimTime(self.0.abs_diff(other.0))
    }

    /// `self - other`, stopping at zero instead of underflowing.
    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(
            self.0
                .checked_sub(rhs.0)
                .expect("SimTime subtraction went negative"),
        )
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Time needed to serialize `bytes` onto a line running at `rate_bps`,
/// rounded up to a whole nanosecond.
///
/// A 1500-byte frame on a 10 Gb/s line takes exactly 1.2 us; a 64-byte
/// report on the same line takes 51.2 ns and rounds up to 52 ns.
pub fn serialization_ns(bytes: u64, rate_bps: u64) -> SimTime {
    assert!(rate_bps > 0, "line rate must be positive");
    let bits_scaled = bytes as u128 * 8 * 1_000_000_000;
    SimTime(bits_scaled.div_ceil(rate_bps as u128) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_agree() {
        assert_eq!(SimTime::from_ms(1_500).as_ns(), 1_500_000_000);
        assert_eq!(SimTime::from_us(72), SimTime::from_ns(72_000));
        assert_eq!(SimTime::from_secs(100).as_secs_f64(), 100.0);
        assert_eq!(SimTime::from_secs_f64(0.0015), SimTime::from_us(1_500));
    }

    #[test]
    fn saturating_sub_stops_at_zero() {
        let a = SimTime::from_ns(5);
        let b = SimTime::from_ns(9);
        assert_eq!(b.saturating_sub(a), SimTime::from_ns(4));
        assert_eq!(a.saturating_sub(b), SimTime::ZERO);
    }

    #[test]
    #[should_panic(expected = "negative")]
    fn sub_underflow_panics() {
        let _ = SimTime::from_ns(1) - SimTime::from_ns(2);
    }

    #[test]
    fn frame_serialization_at_nominal_rate() {
        // 1500 B * 8 / 10 Gb/s = 1.2 us exactly.
        assert_eq!(
            serialization_ns(1_500, 10_000_000_000),
            SimTime::from_ns(1_200)
        );
        // 64 B MPCP report rounds 51.2 ns up to 52 ns.
        assert_eq!(serialization_ns(64, 10_000_000_000), SimTime::from_ns(52));
    }
}
