//! End-to-end runs: plan, generate, warm up, repeat, verify, log.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use dwarfbench_core::dwarfs::{self, DwarfError, KernelInput, KernelOutput, Verdict};
use dwarfbench_core::energy::{EnergyProvider, MockProvider};
use dwarfbench_core::log::{LogHeader, RunLog};
use dwarfbench_core::measure::{RegionEnergy, RegionTiming, Recorder};
use dwarfbench_core::sizing::{class_entry, PlanEntry};
use dwarfbench_core::stats::{required_repetitions, RepetitionPolicy, StatsError};
use dwarfbench_core::{lookup, Benchmark, DeviceProfile, Region, Sample, SampleFlags, SizeClass, UnknownBenchmark};
use thiserror::Error;

use crate::chrono::{calibration, MonotonicClock};
use crate::io::{self, IoError};
use crate::SampleSink;

pub const DEFAULT_SEED: u64 = 42;
/// Classes run when none are named.
pub const DEFAULT_CLASSES: [SizeClass; 3] = [SizeClass::Tiny, SizeClass::Small, SizeClass::Medium];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BenchmarkSelection {
    All,
    Named(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnergySelection {
    Off,
    /// Mock provider replaying a `t_seconds power_watts` file against the
    /// real monotonic clock.
    Mock(PathBuf),
    /// Linux powercap counter; needs the `rapl` feature.
    Rapl,
}

impl FromStr for EnergySelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(Self::Off),
            "rapl" => Ok(Self::Rapl),
            _ => match s.strip_prefix("mock:") {
                Some(path) if !path.is_empty() => Ok(Self::Mock(path.into())),
                _ => Err(format!("unknown energy provider `{s}` (expected off, rapl or mock:<file>)")),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub benchmarks: BenchmarkSelection,
    /// Empty means [`DEFAULT_CLASSES`], plus large when `include_large`.
    pub size_classes: Vec<SizeClass>,
    pub include_large: bool,
    /// `None` selects the built-in default profile.
    pub device_profile: Option<PathBuf>,
    pub seed: u64,
    pub policy: RepetitionPolicy,
    pub energy: EnergySelection,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            benchmarks: BenchmarkSelection::All,
            size_classes: Vec::new(),
            include_large: false,
            device_profile: None,
            seed: DEFAULT_SEED,
            policy: RepetitionPolicy::default(),
            energy: EnergySelection::Off,
            output: None,
        }
    }
}

/// A validated configuration with every name and file resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub benchmarks: Vec<Benchmark>,
    pub classes: Vec<SizeClass>,
    pub profile: DeviceProfile,
    pub seed: u64,
    pub policy: RepetitionPolicy,
    pub energy: EnergySelection,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    UnknownBenchmark(#[from] UnknownBenchmark),
    #[error("empty {0} selection")]
    EmptySelection(&'static str),
    #[error("the large class needs --include-large")]
    LargeNotRequested,
    #[error("energy provider `{0}` is not available in this build or on this machine")]
    EnergyUnavailable(&'static str),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{benchmark}/{class}: {source}")]
    Kernel { benchmark: &'static str, class: SizeClass, source: DwarfError },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl HarnessError {
    /// Errors caused by the configuration rather than by execution.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Self::Kernel { .. } | Self::Stats(_))
    }
}

pub fn resolve(config: &RunConfig) -> Result<ResolvedConfig, HarnessError> {
    let mut benchmarks = match &config.benchmarks {
        BenchmarkSelection::All => Benchmark::ALL.to_vec(),
        BenchmarkSelection::Named(names) => {
            names.iter().map(|n| lookup(n).map(|s| s.benchmark)).collect::<Result<Vec<_>, _>>()?
        }
    };
    benchmarks.sort();
    benchmarks.dedup();
    let mut classes = if config.size_classes.is_empty() {
        let mut c = DEFAULT_CLASSES.to_vec();
        if config.include_large {
            c.push(SizeClass::Large);
        }
        c
    } else {
        config.size_classes.clone()
    };
    classes.sort();
    classes.dedup();
    if classes.contains(&SizeClass::Large) && !config.include_large {
        return Err(HarnessError::LargeNotRequested);
    }
    if benchmarks.is_empty() {
        return Err(HarnessError::EmptySelection("benchmark"));
    }
    if classes.is_empty() {
        return Err(HarnessError::EmptySelection("size class"));
    }
    let profile = match &config.device_profile {
        Some(path) => io::load_profile(path)?,
        None => DeviceProfile::default(),
    };
    Ok(ResolvedConfig {
        benchmarks,
        classes,
        profile,
        seed: config.seed,
        policy: config.policy,
        energy: config.energy.clone(),
    })
}

fn open_energy(selection: &EnergySelection) -> Result<Option<Box<dyn EnergyProvider>>, HarnessError> {
    match selection {
        EnergySelection::Off => Ok(None),
        EnergySelection::Mock(path) => Ok(Some(Box::new(MockProvider::new(io::load_power_profile(path)?, MonotonicClock)))),
        EnergySelection::Rapl => open_rapl(),
    }
}

#[cfg(feature = "rapl")]
fn open_rapl() -> Result<Option<Box<dyn EnergyProvider>>, HarnessError> {
    crate::rapl::RaplProvider::open(std::path::Path::new(crate::rapl::DEFAULT_ZONE))
        .map(|p| Some(Box::new(p) as Box<dyn EnergyProvider>))
        .ok_or(HarnessError::EnergyUnavailable("rapl"))
}

#[cfg(not(feature = "rapl"))]
fn open_rapl() -> Result<Option<Box<dyn EnergyProvider>>, HarnessError> {
    Err(HarnessError::EnergyUnavailable("rapl"))
}

fn energy_label(selection: &EnergySelection) -> &'static str {
    match selection {
        EnergySelection::Off => "off",
        EnergySelection::Mock(_) => "mock",
        EnergySelection::Rapl => "rapl",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PairStatus {
    Completed { reps: u32, verdict: Verdict, ci_met: Option<bool> },
    Skipped(String),
}

/// Progress notification, one per (benchmark, class).
#[derive(Clone, Debug, PartialEq)]
pub struct PairReport {
    pub benchmark: Benchmark,
    pub class: SizeClass,
    pub status: PairStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub log: RunLog,
    pub pairs: Vec<PairReport>,
}

impl RunOutcome {
    pub fn verify_failures(&self) -> impl Iterator<Item = &PairReport> {
        self.pairs.iter().filter(|p| matches!(&p.status, PairStatus::Completed { verdict, .. } if !verdict.passed))
    }
}

fn repetition(
    input: &KernelInput,
    overhead_ns: u64,
    energy: &mut Option<Box<dyn EnergyProvider>>,
) -> Result<(KernelOutput, Vec<RegionTiming>), DwarfError> {
    let mut rec = Recorder::new(MonotonicClock, overhead_ns);
    if let Some(p) = energy.as_deref_mut() {
        rec = rec.with_energy(p);
    }
    let out = dwarfs::run(input, &mut rec)?;
    Ok((out, rec.take_timings()))
}

fn compute_ns(timings: &[RegionTiming]) -> f64 {
    timings.iter().filter(|t| t.region == Region::Compute).map(|t| t.duration_ns as f64).sum()
}

struct PairContext<'a> {
    cfg: &'a ResolvedConfig,
    overhead_ns: u64,
    energy: &'a mut Option<Box<dyn EnergyProvider>>,
    sink: &'a SampleSink,
    header: &'a mut LogHeader,
}

fn put(header: &mut LogHeader, b: Benchmark, class: SizeClass, key: &str, value: impl ToString) {
    header
        .insert(format!("run.{}.{}.{key}", b.name(), class), value.to_string())
        .expect("run.* keys are not reserved");
}

fn run_pair(ctx: &mut PairContext<'_>, b: Benchmark, class: SizeClass, entry: &PlanEntry) -> Result<PairStatus, HarnessError> {
    let kernel_err = |source| HarnessError::Kernel { benchmark: b.name(), class, source };
    let input = dwarfs::generate(b, &entry.params, ctx.cfg.seed).map_err(kernel_err)?;
    let policy = &ctx.cfg.policy;

    repetition(&input, ctx.overhead_ns, ctx.energy).map_err(kernel_err)?;

    let mut reps: Vec<Vec<RegionTiming>> = Vec::new();
    let mut last = None;
    let mut measure = |count: u32, reps: &mut Vec<Vec<RegionTiming>>| -> Result<(), HarnessError> {
        for _ in 0..count {
            let (out, timings) = repetition(&input, ctx.overhead_ns, ctx.energy).map_err(kernel_err)?;
            reps.push(timings);
            last = Some(out);
        }
        Ok(())
    };
    measure(policy.min_reps, &mut reps)?;
    // A fixed policy has no precision target, so it never reports one as missed.
    let ci_met = if policy.min_reps < policy.max_reps {
        let pilot: Vec<f64> = reps.iter().map(|t| compute_ns(t)).collect();
        let estimate = required_repetitions(&pilot, policy)?;
        measure(estimate.reps - policy.min_reps, &mut reps)?;
        Some(estimate.attainable)
    } else {
        None
    };
    let output = last.expect("min_reps >= 1");
    let verdict = dwarfs::verify(&input, &output);

    let mut flags = SampleFlags::empty();
    flags.set(SampleFlags::VERIFY_FAILED, !verdict.passed);
    flags.set(SampleFlags::CI_UNMET, ci_met == Some(false));
    let device = ctx.cfg.profile.id();
    let samples = reps.iter().enumerate().flat_map(|(rep, timings)| {
        timings.iter().map(move |t| {
            let mut f = flags;
            f.set(SampleFlags::ENERGY_UNAVAILABLE, matches!(t.energy, RegionEnergy::Failed(_)));
            Sample {
                benchmark: b.name().to_string(),
                size_class: class,
                device: device.to_string(),
                region: t.region,
                repetition: rep as u32,
                duration_ns: t.duration_ns,
                energy_uj: t.energy.microjoules(),
                flags: f,
            }
        })
    });
    ctx.sink.extend(samples);

    let h = &mut *ctx.header;
    put(h, b, class, "status", "ok");
    let params: Vec<String> = entry.params.iter().map(|(k, v)| format!("{k}:{v}")).collect();
    put(h, b, class, "params", params.join(" "));
    put(h, b, class, "working_set_bytes", entry.working_set_bytes);
    put(h, b, class, "reps", reps.len());
    put(h, b, class, "verify", if verdict.passed { "pass" } else { "fail" });
    put(h, b, class, "verify_check", verdict.check);
    put(h, b, class, "max_error", format!("{:e}", verdict.max_error));
    put(h, b, class, "digest", output.digest());
    if let Some(met) = ci_met {
        put(h, b, class, "ci", if met { "met" } else { "unmet" });
    }
    Ok(PairStatus::Completed { reps: reps.len() as u32, verdict, ci_met })
}

fn unix_timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs every selected (benchmark, class) pair in order. Infeasible classes
/// and failed verifications are recorded and the suite continues.
pub fn execute(cfg: &ResolvedConfig, mut observe: impl FnMut(&PairReport)) -> Result<RunOutcome, HarnessError> {
    let mut energy = open_energy(&cfg.energy)?;
    let overhead_ns = calibration().overhead_median_ns;
    let p = &cfg.policy;
    let mut header = LogHeader::new(dwarfbench_core::SUITE_VERSION, cfg.profile.id(), cfg.seed);
    let mut put_meta = |k: &str, v: String| header.insert(k, v).expect("metadata keys are not reserved");
    put_meta("timestamp", unix_timestamp().to_string());
    put_meta("profile_hash", cfg.profile.fingerprint());
    put_meta(
        "policy",
        format!("min:{} max:{} target:{} level:{}", p.min_reps, p.max_reps, p.target_rel_halfwidth, p.ci_level),
    );
    put_meta("energy", energy_label(&cfg.energy).to_string());

    let sink = SampleSink::default();
    let mut pairs = Vec::new();
    for &b in &cfg.benchmarks {
        for &class in &cfg.classes {
            let status = match class_entry(b, &cfg.profile, class) {
                Err(e) => {
                    put(&mut header, b, class, "status", format!("skipped: {e}"));
                    PairStatus::Skipped(e.to_string())
                }
                Ok(entry) => {
                    let mut ctx = PairContext { cfg, overhead_ns, energy: &mut energy, sink: &sink, header: &mut header };
                    run_pair(&mut ctx, b, class, &entry)?
                }
            };
            let report = PairReport { benchmark: b, class, status };
            observe(&report);
            pairs.push(report);
        }
    }
    let log = RunLog { header, records: sink.into_samples() };
    Ok(RunOutcome { log, pairs })
}

/// [`resolve`] and [`execute`], then write the log when an output path is set.
pub fn run(config: &RunConfig, observe: impl FnMut(&PairReport)) -> Result<RunOutcome, HarnessError> {
    let cfg = resolve(config)?;
    let outcome = execute(&cfg, observe)?;
    if let Some(path) = &config.output {
        io::write_log(&outcome.log, path)?;
    }
    Ok(outcome)
}
