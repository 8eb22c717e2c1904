//! Region instrumentation over an abstract monotonic clock.
//!
//! Kernels call [`RegionRecorder::region`] once per phase. [`Recorder`]
//! timestamps each phase with a [`Clock`], subtracts a fixed calibrated
//! overhead and, when an energy provider is attached, brackets the timed
//! section with two counter reads:
//!
//! ```text
//! energy-start, time-start, work, time-end, energy-end
//! ```

use alloc::vec::Vec;
use core::convert::Infallible;

use crate::energy::{EnergyError, EnergyProvider};
use crate::model::Region;

/// Monotonic nanosecond clock with an arbitrary epoch.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now_ns(&self) -> u64 {
        (**self).now_ns()
    }
}

impl<C: Clock + ?Sized> Clock for alloc::sync::Arc<C> {
    fn now_ns(&self) -> u64 {
        (**self).now_ns()
    }
}

/// Sink for the phases of one repetition.
pub trait RegionRecorder {
    /// Runs `work` as `region`. On error nothing is recorded and the error
    /// is returned unchanged.
    fn region<T, E>(&mut self, region: Region, work: impl FnOnce() -> Result<T, E>) -> Result<T, E>;

    fn run<T>(&mut self, region: Region, work: impl FnOnce() -> T) -> T {
        match self.region(region, || Ok::<T, Infallible>(work())) {
            Ok(v) => v,
            Err(never) => match never {},
        }
    }
}

/// Recorder that only runs the work. Used for verification-only runs.
#[derive(Debug, Default, Clone, Copy)]
pub struct Untimed;

impl RegionRecorder for Untimed {
    fn region<T, E>(&mut self, _region: Region, work: impl FnOnce() -> Result<T, E>) -> Result<T, E> {
        work()
    }
}

/// Recorder that only lists the regions it saw, in order.
#[derive(Debug, Default, Clone)]
pub struct RegionTrace(pub Vec<Region>);

impl RegionRecorder for RegionTrace {
    fn region<T, E>(&mut self, region: Region, work: impl FnOnce() -> Result<T, E>) -> Result<T, E> {
        let out = work()?;
        self.0.push(region);
        Ok(out)
    }
}

/// Energy outcome of one region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionEnergy {
    /// No provider attached.
    Off,
    Measured(u64),
    Failed(EnergyError),
}

impl RegionEnergy {
    pub fn microjoules(self) -> Option<u64> {
        match self {
            Self::Measured(uj) => Some(uj),
            _ => None,
        }
    }
}

/// Timing of one executed region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionTiming {
    pub region: Region,
    pub start_ns: u64,
    /// `end - start - overhead`, floored at zero.
    pub duration_ns: u64,
    pub energy: RegionEnergy,
}

/// Duration with the calibrated overhead removed, floored at zero.
pub fn corrected_duration(start_ns: u64, end_ns: u64, overhead_ns: u64) -> u64 {
    end_ns.saturating_sub(start_ns).saturating_sub(overhead_ns)
}

/// Collects [`RegionTiming`]s in call order.
pub struct Recorder<'e, C: Clock> {
    clock: C,
    overhead_ns: u64,
    energy: Option<&'e mut dyn EnergyProvider>,
    timings: Vec<RegionTiming>,
}

impl<C: Clock + core::fmt::Debug> core::fmt::Debug for Recorder<'_, C> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Recorder")
            .field("clock", &self.clock)
            .field("overhead_ns", &self.overhead_ns)
            .field("energy", &self.energy.as_ref().map(|p| p.name()))
            .field("timings", &self.timings)
            .finish()
    }
}

impl<'e, C: Clock> Recorder<'e, C> {
    pub fn new(clock: C, overhead_ns: u64) -> Self {
        Self { clock, overhead_ns, energy: None, timings: Vec::new() }
    }

    pub fn with_energy(mut self, provider: &'e mut dyn EnergyProvider) -> Self {
        self.energy = Some(provider);
        self
    }

    pub fn timings(&self) -> &[RegionTiming] {
        &self.timings
    }

    pub fn take_timings(&mut self) -> Vec<RegionTiming> {
        core::mem::take(&mut self.timings)
    }

    pub fn clock(&self) -> &C {
        &self.clock
    }
}

impl<C: Clock> RegionRecorder for Recorder<'_, C> {
    fn region<T, E>(&mut self, region: Region, work: impl FnOnce() -> Result<T, E>) -> Result<T, E> {
        let e0 = self.energy.as_deref_mut().map(|p| p.read());
        let t0 = self.clock.now_ns();
        let out = work();
        let t1 = self.clock.now_ns();
        let e1 = self.energy.as_deref_mut().map(|p| p.read());
        let out = out?;
        let energy = match (e0, e1) {
            (None, _) | (_, None) => RegionEnergy::Off,
            (Some(a), Some(b)) => match crate::energy::energy_between(a, b) {
                Ok(uj) => RegionEnergy::Measured(uj),
                Err(e) => RegionEnergy::Failed(e),
            },
        };
        self.timings.push(RegionTiming {
            region,
            start_ns: t0,
            duration_ns: corrected_duration(t0, t1, self.overhead_ns),
            energy,
        });
        Ok(out)
    }
}
