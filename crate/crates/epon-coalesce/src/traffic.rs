//! Upstream traffic source: fixed-size frames, Pareto interarrival times.
//!
//! Interarrival gaps are drawn as `x_m * U^(-1/alpha)` with `U` uniform on
//! (0, 1], the inverse-CDF form of a Pareto distribution with shape
//! `alpha` and scale `x_m`. The scale is calibrated so the source offers a
//! chosen fraction (`load`) of the available upstream bandwidth:
//!
//! ```text
//! mean gap = frame_bits / (load * rate_bps)        seconds
//! x_m      = mean gap * (alpha - 1) / alpha        (Pareto mean identity)
//! ```
//!
//! Draws come from a counter-based ChaCha stream, so a `(config, seed)`
//! pair always produces the same arrival sequence on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::time::SimTime;

/// A fixed-size upstream frame. `id` is assigned in arrival order and the
/// departure stamp is filled in when serialization onto the line finishes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub id: u64,
    pub size_bytes: u32,
    pub arrival: SimTime,
    pub departure: Option<SimTime>,
}

/// Source parameters. `load` is the offered fraction of `rate_bps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficConfig {
    pub alpha: f64,
    pub frame_bytes: u32,
    pub load: f64,
    pub rate_bps: u64,
    pub seed: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            alpha: 2.5,
            frame_bytes: 1_500,
            load: 0.5,
            rate_bps: 200_000_000,
            seed: 1,
        }
    }
}

/// Pareto scale (`x_m`, in nanoseconds) that makes the mean interarrival
/// gap match the requested load. With the defaults and load 0.5 the mean
/// gap is 120 us and the scale works out to 72 us.
pub fn calibrate_scale(cfg: &TrafficConfig) -> f64 {
    assert!(cfg.alpha > 1.0, "Pareto mean diverges for alpha <= 1");
    assert!(cfg.load > 0.0, "load must be positive");
    let frame_bits = cfg.frame_bytes as f64 * 8.0;
    let mean_ns = frame_bits / (cfg.load * cfg.rate_bps as f64) * 1e9;
    mean_ns * (cfg.alpha - 1.0) / cfg.alpha
}

/// One inverse-CDF draw, rounded to the nearest nanosecond. `u` must lie
/// in (0, 1]; `u = 1` gives the distribution minimum `x_m` itself.
pub fn interarrival_from_u(x_m_ns: f64, alpha: f64, u: f64) -> SimTime {
    debug_assert!(u > 0.0 && u <= 1.0, "uniform draw outside (0, 1]");
    SimTime((x_m_ns * u.powf(-1.0 / alpha)).round() as u64)
}

/// Stateful generator handing out one gap after another.
pub struct ParetoSource {
    x_m_ns: f64,
    alpha: f64,
    rng: ChaCha8Rng,
}

impl ParetoSource {
    pub fn new(cfg: &TrafficConfig) -> Self {
        ParetoSource {
            x_m_ns: calibrate_scale(cfg),
            alpha: cfg.alpha,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        }
    }

    pub fn scale_ns(&self) -> f64 {
        self.x_m_ns
    }

    /// Gap until the next arrival.
    pub fn next_interarrival(&mut self) -> SimTime {
        // gen::<f64>() covers [0, 1); flip it to (0, 1] so the exponent
        // never sees zero.
        let u = 1.0 - self.rng.gen::<f64>();
        interarrival_from_u(self.x_m_ns, self.alpha, u)
    }
}
