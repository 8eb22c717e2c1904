//! Acceptance suite. Each criterion prints `PASS` or `FAIL` with its
//! measurement; the process exits non-zero if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::thread::sleep;
use std::time::{Duration, Instant};

use dwarfbench::chrono::{calibration, read_monotonic, time_region, SampleContext};
use dwarfbench::core::dwarfs;
use dwarfbench::core::energy::{region_energy, MockProvider, PowerProfile, VirtualClock};
use dwarfbench::core::log::{parse_log, LogHeader, RunLog};
use dwarfbench::core::measure::Untimed;
use dwarfbench::core::report::scaling_report;
use dwarfbench::core::rng::SplitMix64;
use dwarfbench::core::sizing::{build_size_plan, next_growth, solve_for, working_set_bytes};
use dwarfbench::core::stats::{summarize, RepetitionPolicy};
use dwarfbench::core::{Benchmark, DeviceProfile, Region, Sample, SampleFlags, SizeClass};
use dwarfbench::harness::{execute, EnergySelection, ResolvedConfig, RunOutcome};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit_s: f64) -> Result<f64, String> {
    let s = start.elapsed().as_secs_f64();
    ensure(s < limit_s, || format!("took {s:.1} s, limit {limit_s} s"))?;
    Ok(s)
}

fn kernel_oracles() -> Outcome {
    let start = Instant::now();
    let device = DeviceProfile::default();
    let mut worst = BTreeMap::new();
    for b in Benchmark::ALL {
        let params = build_size_plan(b.name(), &device).unwrap().entry(SizeClass::Tiny).unwrap().params.clone();
        for seed in 0..100 {
            let input = dwarfs::generate(b, &params, 0x9E37 ^ seed).map_err(|e| e.to_string())?;
            let output = dwarfs::run(&input, &mut Untimed).map_err(|e| e.to_string())?;
            let check = support::oracle_check(&input, &output);
            ensure(check.passed(), || format!("{b} seed {seed}: error {:e} > {:e}", check.error, check.tolerance))?;
            let w: &mut f64 = worst.entry(b.name()).or_insert(0.0);
            *w = w.max(check.error);
        }
    }
    let s = within(start, 60.0)?;
    let errs: Vec<String> = worst.iter().map(|(b, e)| format!("{b} {e:.1e}")).collect();
    Ok(format!("800 instances in {s:.1} s; worst errors: {}", errs.join(", ")))
}

fn sizing_inverse() -> Outcome {
    let start = Instant::now();
    let device = DeviceProfile::default();
    let mut checked = 0;
    for b in Benchmark::ALL {
        let plan = build_size_plan(b.name(), &device).map_err(|e| e.to_string())?;
        let growth = b.spec().growth_param;
        let bound = b.spec().param(growth).unwrap().max;
        for pair in plan.entries.windows(2) {
            ensure(pair[1].working_set_bytes > pair[0].working_set_bytes, || format!("{b}: plan not increasing"))?;
        }
        for e in &plan.entries {
            ensure(e.working_set_bytes <= e.budget_bytes, || format!("{b} {}: over budget", e.class))?;
            let g = e.params.get(growth).unwrap();
            let next = next_growth(b, g);
            if next <= bound {
                let bigger = dwarfbench::core::sizing::params_for_growth(b, next);
                let ws = working_set_bytes(b.name(), &bigger).unwrap();
                ensure(ws > e.budget_bytes, || format!("{b} {}: growth {next} still fits", e.class))?;
            }
            ensure(solve_for(b, e.budget_bytes).unwrap() == e.params, || format!("{b}: unstable solve"))?;
            checked += 1;
        }
    }
    let s = within(start, 5.0)?;
    Ok(format!("{checked} benchmark x class entries in {:.3} s", s))
}

fn ci_coverage() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x5EED);
    let mut normal = || {
        let (u, v) = (1.0 - rng.next_f64(), rng.next_f64());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    };
    let (mu, sigma) = (5_000.0, 400.0);
    let mut covered = 0;
    for _ in 0..1000 {
        let xs: Vec<f64> = (0..30).map(|_| mu + sigma * normal()).collect();
        let s = summarize(&xs, 0.95).map_err(|e| e.to_string())?;
        covered += usize::from(s.ci_low_ns <= mu && mu <= s.ci_high_ns);
    }
    let rate = covered as f64 / 10.0;
    ensure((93.0..=97.0).contains(&rate), || format!("coverage {rate}% outside 93-97%"))?;
    let s = within(start, 5.0)?;
    Ok(format!("coverage {rate}% in {s:.3} s"))
}

fn timer_discipline() -> Outcome {
    let start = Instant::now();
    let mut last = read_monotonic();
    for i in 0..1_000_000 {
        let now = read_monotonic();
        ensure(now >= last, || format!("read {i} went backwards: {last} -> {now}"))?;
        last = now;
    }
    let cal = *calibration();
    let ctx = SampleContext { benchmark: "empty".into(), size_class: SizeClass::Tiny, device: "host".into(), repetition: 0 };
    let mut empty: Vec<u64> = (0..10_000)
        .map(|_| time_region(&ctx, Region::Compute, || Ok::<_, ()>(())).unwrap().1.duration_ns)
        .collect();
    empty.sort_unstable();
    let median = empty[empty.len() / 2];
    ensure(median <= 1_000, || format!("empty-region median {median} ns > 1000 ns"))?;
    let (_, slept) = time_region(&ctx, Region::Compute, || {
        sleep(Duration::from_millis(10));
        Ok::<_, ()>(())
    })
    .unwrap();
    // The calibrated overhead is subtracted; add it back for the raw interval.
    let raw = slept.duration_ns + cal.overhead_median_ns;
    ensure(raw >= 10_000_000, || format!("sleep(10 ms) measured {raw} ns"))?;
    let s = within(start, 30.0)?;
    Ok(format!(
        "10^6 monotonic reads; empty median {median} ns; sleep {:.3} ms; overhead {} ns; {s:.2} s",
        raw as f64 / 1e6,
        cal.overhead_median_ns
    ))
}

fn energy_mock() -> Outcome {
    let start = Instant::now();
    let clock = VirtualClock::new();
    let mut constant = MockProvider::new(PowerProfile::constant(10.0).unwrap(), &clock);
    let (_, e) = region_energy(&mut constant, || clock.advance_ns(1_000_000_000));
    ensure(e == Ok(10_000_000), || format!("constant 10 W over 1 s gave {e:?}"))?;

    let ramp = vec![(0.0, 5.0), (0.5, 20.0), (1.5, 80.0), (3.0, 40.0)];
    let trapezoid: f64 = ramp.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum::<f64>() * 1e6;
    let clock = VirtualClock::new();
    let mut provider = MockProvider::new(PowerProfile::new(ramp).unwrap(), &clock);
    let (_, e) = region_energy(&mut provider, || clock.advance_ns(3_000_000_000));
    let got = e.map_err(|e| e.to_string())? as f64;
    let rel = (got - trapezoid).abs() / trapezoid;
    ensure(rel <= 0.01, || format!("ramp {got} uJ vs trapezoid {trapezoid} uJ"))?;
    let s = within(start, 1.0)?;
    Ok(format!("constant exact at 10000000 uJ; ramp rel. error {rel:.1e}; {:.4} s", s))
}

fn random_text(rng: &mut SplitMix64) -> String {
    const POOL: &[char] = &['a', 'z', '_', ',', '=', '%', '#', '\n', '\r', ' ', '0', 'é', '∂', '|'];
    let len = rng.below(12) as usize;
    (0..len).map(|_| POOL[rng.below(POOL.len() as u64) as usize]).collect()
}

fn random_log(rng: &mut SplitMix64, records: usize) -> RunLog {
    let mut header = LogHeader::new(random_text(rng), random_text(rng), rng.next_u64());
    for i in 0..rng.below(5) {
        header.insert(format!("k{i}.{}", random_text(rng)), random_text(rng)).unwrap();
    }
    let records = (0..records)
        .map(|_| Sample {
            benchmark: random_text(rng),
            size_class: SizeClass::ALL[rng.below(4) as usize],
            device: random_text(rng),
            region: Region::ALL[rng.below(5) as usize],
            repetition: rng.next_u64() as u32,
            duration_ns: rng.next_u64(),
            energy_uj: if rng.below(2) == 0 { None } else { Some(rng.next_u64()) },
            flags: SampleFlags::from_bits_truncate(rng.below(8) as u8),
        })
        .collect();
    RunLog { header, records }
}

fn log_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(77);
    let mut total = 0;
    for i in 0..40 {
        let n = if i == 0 { 10_000 } else { rng.below(10_001) as usize };
        let log = random_log(&mut rng, n);
        let parsed = parse_log(log.to_text().as_bytes()).map_err(|e| e.to_string())?;
        ensure(parsed == log, || format!("log {i} ({n} records) changed in round trip"))?;
        total += n;
    }
    let seed_text = random_log(&mut rng, 20).to_text().into_bytes();
    let mut rejected = 0;
    for i in 0..10_000 {
        let bytes = if i % 2 == 0 {
            (0..rng.below(512)).map(|_| rng.next_u64() as u8).collect::<Vec<u8>>()
        } else {
            let mut b = seed_text.clone();
            for _ in 0..=rng.below(8) {
                let at = rng.below(b.len() as u64) as usize;
                b[at] = rng.next_u64() as u8;
            }
            b.truncate(rng.below(b.len() as u64 + 1) as usize);
            b
        };
        let ok = catch_unwind(|| parse_log(&bytes).is_err()).map_err(|_| format!("parse panicked on stream {i}"))?;
        rejected += usize::from(ok);
    }
    let s = within(start, 30.0)?;
    Ok(format!("{total} records over 40 logs round-tripped; 10000 fuzzed streams, {rejected} rejected, 0 panics; {s:.1} s"))
}

fn full_run(classes: &[SizeClass], reps: u32) -> Result<RunOutcome, String> {
    let cfg = ResolvedConfig {
        benchmarks: Benchmark::ALL.to_vec(),
        classes: classes.to_vec(),
        profile: DeviceProfile::default(),
        seed: 2024,
        policy: RepetitionPolicy::fixed(reps).map_err(|e| e.to_string())?,
        energy: EnergySelection::Off,
    };
    execute(&cfg, |_| {}).map_err(|e| e.to_string())
}

fn scaling() -> Outcome {
    let start = Instant::now();
    let outcome = full_run(&[SizeClass::Tiny, SizeClass::Small, SizeClass::Medium], 10)?;
    if let Some(p) = outcome.verify_failures().next() {
        return Err(format!("{} {} failed verification", p.benchmark, p.class));
    }
    let report = scaling_report(std::slice::from_ref(&outcome.log)).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for b in Benchmark::ALL {
        let medians: Vec<f64> =
            report.points.iter().filter(|p| p.benchmark == b.name()).map(|p| p.median_compute_ns).collect();
        ensure(medians.len() == 3, || format!("{b}: {} classes measured", medians.len()))?;
        ensure(medians[0] < medians[1] && medians[1] < medians[2], || format!("{b}: medians {medians:?}"))?;
        ratios.push(format!("{b} x{:.0}", medians[2] / medians[0]));
    }
    let s = within(start, 15.0 * 60.0)?;
    Ok(format!("24 pairs verified in {s:.0} s; medium/tiny: {}", ratios.join(", ")))
}

fn reproducibility() -> Outcome {
    let classes = [SizeClass::Tiny, SizeClass::Small];
    let (a, b) = (full_run(&classes, 3)?.log, full_run(&classes, 3)?.log);
    let strip_header = |log: &RunLog| {
        let mut h = log.header.clone();
        h.remove("timestamp");
        h
    };
    ensure(strip_header(&a) == strip_header(&b), || "headers differ beyond the timestamp".into())?;
    let strip_timing = |log: &RunLog| -> Vec<Sample> {
        log.records.iter().cloned().map(|s| Sample { duration_ns: 0, energy_uj: None, ..s }).collect()
    };
    ensure(strip_timing(&a) == strip_timing(&b), || "record sequences differ".into())?;
    let digests = a.header.extra().filter(|(k, _)| k.ends_with(".digest")).count();
    Ok(format!("{} records and {digests} output digests identical; only timestamp and measured durations differ", a.records.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("kernel oracle equivalence", kernel_oracles),
        ("sizing inverse/maximality", sizing_inverse),
        ("CI coverage", ci_coverage),
        ("timer discipline", timer_discipline),
        ("energy mock exactness", energy_mock),
        ("log round-trip", log_round_trip),
        ("qualitative scaling", scaling),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let result = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
