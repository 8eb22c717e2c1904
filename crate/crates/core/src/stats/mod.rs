//! Statistical reduction of measured durations: summaries with Student t
//! confidence intervals, IQR outlier counts, lag-1 autocorrelation
//! screening and repetition planning.

pub mod tdist;

use alloc::vec::Vec;

use thiserror::Error;

pub use tdist::{t_cdf, t_quantile};

/// |lag-1 autocorrelation| above which a summary carries a warning.
pub const AUTOCORRELATION_WARN: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StatsError {
    #[error("no samples")]
    EmptyInput,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("pilot has {got} samples, policy needs at least {needed}")]
    PilotTooSmall { needed: usize, got: usize },
    #[error("confidence level {0} is not in (0, 1)")]
    InvalidLevel(f64),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("invalid repetition policy: {0}")]
    InvalidPolicy(&'static str),
}

/// Statistical digest of a set of durations (nanoseconds).
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean_ns: f64,
    pub median_ns: f64,
    pub min_ns: f64,
    pub max_ns: f64,
    /// Sample standard deviation; 0 when `degenerate`.
    pub stddev_ns: f64,
    pub ci_low_ns: f64,
    pub ci_high_ns: f64,
    pub ci_level: f64,
    /// Set when n = 1: no spread estimate exists.
    pub degenerate: bool,
    /// Values outside `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]`. Reported, never dropped.
    pub outliers: usize,
    /// Lag-1 autocorrelation, filled in by [`summarize_series`].
    pub lag1: Option<f64>,
}

impl Summary {
    pub fn ci_halfwidth(&self) -> f64 {
        0.5 * (self.ci_high_ns - self.ci_low_ns)
    }

    pub fn autocorrelation_warning(&self) -> bool {
        self.lag1.is_some_and(|r| libm::fabs(r) > AUTOCORRELATION_WARN)
    }
}

fn check_level(level: f64) -> Result<(), StatsError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidLevel(level))
    }
}

// Linear interpolation between order statistics (Hyndman-Fan type 7).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, libm::sqrt(ss / (n - 1.0)))
}

/// Two-sided t critical value for `level` with `n` samples.
pub fn t_critical(level: f64, n: usize) -> f64 {
    t_quantile(0.5 + 0.5 * level, (n - 1) as f64)
}

/// Summary of `samples` with a two-sided `ci_level` confidence interval on
/// the mean. The result depends only on the multiset of values: samples are
/// sorted before any arithmetic.
pub fn summarize(samples: &[f64], ci_level: f64) -> Result<Summary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    check_level(ci_level)?;
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (mean, stddev) = mean_and_stddev(&sorted);
    let median = quantile_sorted(&sorted, 0.5);
    let (min, max) = (sorted[0], sorted[n - 1]);
    if n == 1 {
        return Ok(Summary {
            n,
            mean_ns: mean,
            median_ns: median,
            min_ns: min,
            max_ns: max,
            stddev_ns: 0.0,
            ci_low_ns: mean,
            ci_high_ns: mean,
            ci_level,
            degenerate: true,
            outliers: 0,
            lag1: None,
        });
    }
    let half = t_critical(ci_level, n) * stddev / libm::sqrt(n as f64);
    let (q1, q3) = (quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let outliers = sorted.iter().filter(|&&x| x < lo_fence || x > hi_fence).count();
    Ok(Summary {
        n,
        mean_ns: mean,
        median_ns: median,
        min_ns: min,
        max_ns: max,
        stddev_ns: stddev,
        ci_low_ns: mean - half,
        ci_high_ns: mean + half,
        ci_level,
        degenerate: false,
        outliers,
        lag1: None,
    })
}

/// [`summarize`] for integer nanosecond durations.
pub fn summarize_durations(durations: &[u64], ci_level: f64) -> Result<Summary, StatsError> {
    let values: Vec<f64> = durations.iter().map(|&d| d as f64).collect();
    summarize(&values, ci_level)
}

/// [`summarize`] for samples in measurement order, adding the lag-1
/// autocorrelation when at least three samples exist.
pub fn summarize_series(samples: &[f64], ci_level: f64) -> Result<Summary, StatsError> {
    let mut summary = summarize(samples, ci_level)?;
    if samples.len() >= 3 {
        summary.lag1 = Some(lag1_autocorrelation(samples)?);
    }
    Ok(summary)
}

/// Pearson correlation between `x[..n-1]` and `x[1..]`. Zero-variance
/// series give 0.
pub fn lag1_autocorrelation(samples: &[f64]) -> Result<f64, StatsError> {
    let n = samples.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    let (head, tail) = (&samples[..n - 1], &samples[1..]);
    let m = (n - 1) as f64;
    let mh = head.iter().sum::<f64>() / m;
    let mt = tail.iter().sum::<f64>() / m;
    let (mut cov, mut vh, mut vt) = (0.0, 0.0, 0.0);
    for (a, b) in head.iter().zip(tail) {
        let (da, db) = (a - mh, b - mt);
        cov += da * db;
        vh += da * da;
        vt += db * db;
    }
    if vh == 0.0 || vt == 0.0 {
        return Ok(0.0);
    }
    Ok((cov / libm::sqrt(vh * vt)).clamp(-1.0, 1.0))
}

/// How many repetitions to measure, and at what confidence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepetitionPolicy {
    pub min_reps: u32,
    pub max_reps: u32,
    /// Target CI half-width as a fraction of the mean.
    pub target_rel_halfwidth: f64,
    pub ci_level: f64,
}

impl Default for RepetitionPolicy {
    fn default() -> Self {
        Self { min_reps: 10, max_reps: 50, target_rel_halfwidth: 0.01, ci_level: 0.95 }
    }
}

impl RepetitionPolicy {
    pub fn new(min_reps: u32, max_reps: u32, target_rel_halfwidth: f64, ci_level: f64) -> Result<Self, StatsError> {
        if min_reps == 0 {
            return Err(StatsError::InvalidPolicy("min_reps must be at least 1"));
        }
        if min_reps > max_reps {
            return Err(StatsError::InvalidPolicy("min_reps exceeds max_reps"));
        }
        if !(target_rel_halfwidth > 0.0 && target_rel_halfwidth < 1.0) {
            return Err(StatsError::InvalidPolicy("target half-width must be in (0, 1)"));
        }
        check_level(ci_level)?;
        Ok(Self { min_reps, max_reps, target_rel_halfwidth, ci_level })
    }

    /// Exactly `reps` repetitions.
    pub fn fixed(reps: u32) -> Result<Self, StatsError> {
        let d = Self::default();
        Self::new(reps, reps, d.target_rel_halfwidth, d.ci_level)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RepetitionEstimate {
    pub reps: u32,
    /// False when even `max_reps` misses the target; `reps` is then `max_reps`.
    pub attainable: bool,
}

/// Predicted CI half-width after `n` repetitions for a given stddev.
pub fn predicted_halfwidth(stddev: f64, n: u32, ci_level: f64) -> f64 {
    if stddev == 0.0 {
        return 0.0;
    }
    if n < 2 {
        return f64::INFINITY;
    }
    t_critical(ci_level, n as usize) * stddev / libm::sqrt(n as f64)
}

/// Smallest repetition count in `[min_reps, max_reps]` whose predicted CI
/// half-width, using the pilot's stddev, is within the target fraction of
/// the pilot's mean.
pub fn required_repetitions(pilot: &[f64], policy: &RepetitionPolicy) -> Result<RepetitionEstimate, StatsError> {
    if pilot.len() < policy.min_reps as usize || pilot.is_empty() {
        return Err(StatsError::PilotTooSmall { needed: policy.min_reps.max(1) as usize, got: pilot.len() });
    }
    if let Some(i) = pilot.iter().position(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    let (mean, stddev) = mean_and_stddev(pilot);
    let target = policy.target_rel_halfwidth * libm::fabs(mean);
    let fits = |n: u32| predicted_halfwidth(stddev, n, policy.ci_level) <= target;
    if fits(policy.min_reps) {
        return Ok(RepetitionEstimate { reps: policy.min_reps, attainable: true });
    }
    if !fits(policy.max_reps) {
        return Ok(RepetitionEstimate { reps: policy.max_reps, attainable: false });
    }
    // The half-width shrinks monotonically in n: fits(lo) is false, fits(hi) true.
    let (mut lo, mut hi) = (policy.min_reps, policy.max_reps);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(RepetitionEstimate { reps: hi, attainable: true })
}
