//! Energy counters attached to timed regions.
//!
//! Providers expose a cumulative microjoule counter. A region's energy is
//! the difference between one read before and one read after it; providers
//! backed by wrapping hardware counters unwrap internally.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::measure::Clock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum EnergyError {
    #[error("energy counter not available")]
    NotAvailable,
    #[error("energy counter went backwards ({start_uj} -> {end_uj} uJ)")]
    CounterWrap { start_uj: u64, end_uj: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnergyReading {
    pub timestamp_ns: u64,
    pub cumulative_uj: u64,
}

/// A cumulative energy counter for one device.
pub trait EnergyProvider {
    fn name(&self) -> &str;
    fn read(&mut self) -> Result<EnergyReading, EnergyError>;
    /// Counter granularity in microjoules.
    fn resolution_uj(&self) -> u64;
}

/// Energy between two reads of the same provider.
pub fn energy_between(
    start: Result<EnergyReading, EnergyError>,
    end: Result<EnergyReading, EnergyError>,
) -> Result<u64, EnergyError> {
    let (start, end) = (start?, end?);
    end.cumulative_uj
        .checked_sub(start.cumulative_uj)
        .ok_or(EnergyError::CounterWrap { start_uj: start.cumulative_uj, end_uj: end.cumulative_uj })
}

/// Runs `work` between two counter reads. The work always runs; the energy
/// result reports why no value is available.
pub fn region_energy<T>(
    provider: &mut dyn EnergyProvider,
    work: impl FnOnce() -> T,
) -> (T, Result<u64, EnergyError>) {
    let start = provider.read();
    let out = work();
    let end = provider.read();
    (out, energy_between(start, end))
}

/// Manually driven clock for deterministic tests and mock providers.
#[derive(Debug, Default)]
pub struct VirtualClock {
    now_ns: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance_ns(&self, ns: u64) {
        self.now_ns.fetch_add(ns, Ordering::SeqCst);
    }

    pub fn set_ns(&self, ns: u64) {
        self.now_ns.store(ns, Ordering::SeqCst);
    }
}

impl Clock for VirtualClock {
    fn now_ns(&self) -> u64 {
        self.now_ns.load(Ordering::SeqCst)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum PowerProfileError {
    #[error("power profile has no points")]
    Empty,
    #[error("point {index}: negative power {watts} W")]
    NegativePower { index: usize, watts: f64 },
    #[error("point {index}: time {t_seconds} s is not after the previous point")]
    NonIncreasingTime { index: usize, t_seconds: f64 },
    #[error("point {index}: non-finite value")]
    NotFinite { index: usize },
    #[error("line {line}: expected `t_seconds power_watts`, got `{text}`")]
    Syntax { line: usize, text: String },
}

/// Piecewise-linear power over time, in watts. Power before the first
/// point equals the first point's value; after the last point it stays at
/// the last value.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerProfile {
    points: Vec<(f64, f64)>,
}

impl PowerProfile {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, PowerProfileError> {
        if points.is_empty() {
            return Err(PowerProfileError::Empty);
        }
        for (index, &(t, w)) in points.iter().enumerate() {
            if !t.is_finite() || !w.is_finite() || t < 0.0 {
                return Err(PowerProfileError::NotFinite { index });
            }
            if w < 0.0 {
                return Err(PowerProfileError::NegativePower { index, watts: w });
            }
            if index > 0 && t <= points[index - 1].0 {
                return Err(PowerProfileError::NonIncreasingTime { index, t_seconds: t });
            }
        }
        Ok(Self { points })
    }

    pub fn constant(watts: f64) -> Result<Self, PowerProfileError> {
        Self::new(alloc::vec![(0.0, watts)])
    }

    /// Parses whitespace-separated `t_seconds power_watts` lines; `#` starts
    /// a comment line.
    pub fn parse(text: &str) -> Result<Self, PowerProfileError> {
        let mut points = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = || PowerProfileError::Syntax { line: idx + 1, text: line.to_string() };
            let mut fields = line.split_whitespace();
            let (Some(t), Some(w), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(syntax());
            };
            let t: f64 = t.parse().map_err(|_| syntax())?;
            let w: f64 = w.parse().map_err(|_| syntax())?;
            points.push((t, w));
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Power at time `t` in seconds.
    pub fn watts_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let ((t0, p0), (t1, p1)) = (w[0], w[1]);
            if t <= t1 {
                return p0 + (p1 - p0) * (t - t0) / (t1 - t0);
            }
        }
        pts[pts.len() - 1].1
    }

    /// Exact integral of power over `[0, t]`, in joules.
    pub fn energy_joules(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let pts = &self.points;
        let first = pts[0].0.min(t);
        let mut total = pts[0].1 * first;
        for w in pts.windows(2) {
            let ((t0, p0), (t1, p1)) = (w[0], w[1]);
            if t <= t0 {
                return total;
            }
            let end = t.min(t1);
            let p_end = p0 + (p1 - p0) * (end - t0) / (t1 - t0);
            total += 0.5 * (p0 + p_end) * (end - t0);
            if t <= t1 {
                return total;
            }
        }
        let (t_last, p_last) = pts[pts.len() - 1];
        total + p_last * (t - t_last)
    }
}

/// Provider whose counter is the analytic integral of a [`PowerProfile`]
/// evaluated at the given clock's current time.
#[derive(Debug)]
pub struct MockProvider<C: Clock> {
    profile: PowerProfile,
    clock: C,
}

impl<C: Clock> MockProvider<C> {
    pub fn new(profile: PowerProfile, clock: C) -> Self {
        Self { profile, clock }
    }

    /// Builds a mock from a raw profile; fails with `NegativePower` on any
    /// negative segment.
    pub fn from_points(points: Vec<(f64, f64)>, clock: C) -> Result<Self, PowerProfileError> {
        Ok(Self::new(PowerProfile::new(points)?, clock))
    }
}

impl<C: Clock> EnergyProvider for MockProvider<C> {
    fn name(&self) -> &str {
        "mock"
    }

    fn read(&mut self) -> Result<EnergyReading, EnergyError> {
        let now = self.clock.now_ns();
        let joules = self.profile.energy_joules(now as f64 / 1e9);
        Ok(EnergyReading { timestamp_ns: now, cumulative_uj: libm::round(joules * 1e6) as u64 })
    }

    fn resolution_uj(&self) -> u64 {
        1
    }
}

/// Provider that never has a reading.
#[derive(Debug, Default, Clone, Copy)]
pub struct UnavailableProvider;

impl EnergyProvider for UnavailableProvider {
    fn name(&self) -> &str {
        "unavailable"
    }

    fn read(&mut self) -> Result<EnergyReading, EnergyError> {
        Err(EnergyError::NotAvailable)
    }

    fn resolution_uj(&self) -> u64 {
        1
    }
}
