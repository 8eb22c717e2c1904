//! Monotonic clock, timer calibration and sample-producing region timing.

use std::hint::black_box;
use std::sync::OnceLock;
use std::time::Instant;

use dwarfbench_core::measure::{corrected_duration, Clock};
use dwarfbench_core::{Region, Sample, SampleFlags, SizeClass};
use thiserror::Error;

/// Fewest trials [`calibrate`] accepts.
pub const MIN_TRIALS: usize = 1000;
/// Trials used by the process-wide calibration.
pub const DEFAULT_TRIALS: usize = 100_000;
/// Empty-region median above this many nanoseconds earns a warning.
pub const OVERHEAD_WARN_NS: u64 = 1_000;

static EPOCH: OnceLock<Instant> = OnceLock::new();
static CALIBRATION: OnceLock<TimerCalibration> = OnceLock::new();

/// Nanoseconds since a process-wide epoch fixed on first use.
pub fn read_monotonic() -> u64 {
    let epoch = *EPOCH.get_or_init(Instant::now);
    u64::try_from(epoch.elapsed().as_nanos()).unwrap_or(u64::MAX)
}

/// [`Clock`] backed by [`read_monotonic`].
#[derive(Clone, Copy, Debug, Default)]
pub struct MonotonicClock;

impl Clock for MonotonicClock {
    fn now_ns(&self) -> u64 {
        read_monotonic()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum ChronoError {
    #[error("calibration needs at least {MIN_TRIALS} trials, got {0}")]
    InsufficientTrials(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimerCalibration {
    pub overhead_median_ns: u64,
    pub overhead_p99_ns: u64,
    /// Smallest positive difference observed between two reads.
    pub resolution_ns: u64,
    pub trials: usize,
}

impl TimerCalibration {
    pub fn overhead_exceeds_warning(&self) -> bool {
        self.overhead_median_ns > OVERHEAD_WARN_NS
    }
}

/// Times `trials` empty regions (two back-to-back reads each).
pub fn calibrate(trials: usize) -> Result<TimerCalibration, ChronoError> {
    if trials < MIN_TRIALS {
        return Err(ChronoError::InsufficientTrials(trials));
    }
    let mut deltas = Vec::with_capacity(trials);
    for _ in 0..trials {
        let t0 = read_monotonic();
        black_box(());
        let t1 = read_monotonic();
        deltas.push(t1 - t0);
    }
    let mut resolution = deltas.iter().copied().filter(|&d| d > 0).min();
    while resolution.is_none() {
        // Coarse clocks: spin until the reading changes.
        let t0 = read_monotonic();
        let mut t1 = t0;
        while t1 == t0 {
            t1 = read_monotonic();
        }
        resolution = Some(t1 - t0);
    }
    deltas.sort_unstable();
    let at = |q: f64| deltas[((deltas.len() - 1) as f64 * q).round() as usize];
    Ok(TimerCalibration {
        overhead_median_ns: at(0.5),
        overhead_p99_ns: at(0.99),
        resolution_ns: resolution.unwrap_or(1),
        trials,
    })
}

/// Process-wide calibration, computed on first use.
pub fn calibration() -> &'static TimerCalibration {
    CALIBRATION.get_or_init(|| calibrate(DEFAULT_TRIALS).expect("DEFAULT_TRIALS >= MIN_TRIALS"))
}

/// Identity fields stamped on samples produced by [`time_region`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleContext {
    pub benchmark: String,
    pub size_class: SizeClass,
    pub device: String,
    pub repetition: u32,
}

/// Runs `work` as `region` and returns its result with a timed sample.
/// Errors from `work` are returned unchanged and produce no sample.
pub fn time_region<T, E>(
    ctx: &SampleContext,
    region: Region,
    work: impl FnOnce() -> Result<T, E>,
) -> Result<(T, Sample), E> {
    let overhead = calibration().overhead_median_ns;
    let t0 = read_monotonic();
    let out = work();
    let t1 = read_monotonic();
    let value = out?;
    let sample = Sample {
        benchmark: ctx.benchmark.clone(),
        size_class: ctx.size_class,
        device: ctx.device.clone(),
        region,
        repetition: ctx.repetition,
        duration_ns: corrected_duration(t0, t1, overhead),
        energy_uj: None,
        flags: SampleFlags::empty(),
    };
    Ok((value, sample))
}
