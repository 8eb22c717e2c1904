use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dwarfbench::chrono::calibration;
use dwarfbench::core::report::{scaling_report, summary_csv};
use dwarfbench::core::sizing::plan_for;
use dwarfbench::core::stats::RepetitionPolicy;
use dwarfbench::core::{Benchmark, DeviceProfile, SizeClass};
use dwarfbench::harness::{self, BenchmarkSelection, EnergySelection, PairReport, PairStatus, RunConfig};
use dwarfbench::io;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "dwarfbench", version, about = "Dwarf-kernel benchmark suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run benchmarks and write a run log.
    Run(RunArgs),
    /// Summarize one or more run logs.
    Report(ReportArgs),
    /// List benchmarks, size classes or per-profile problem sizes.
    List(ListArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Comma-separated benchmark names, or `all`.
    #[arg(long, default_value = "all")]
    benchmarks: String,
    /// Comma-separated size classes [default: tiny,small,medium].
    #[arg(long, value_delimiter = ',')]
    classes: Vec<SizeClass>,
    /// Device profile (key=value file); the built-in default when absent.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = harness::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = RepetitionPolicy::default().min_reps)]
    reps_min: u32,
    #[arg(long, default_value_t = RepetitionPolicy::default().max_reps)]
    reps_max: u32,
    /// Target CI half-width, in percent of the mean.
    #[arg(long, default_value_t = RepetitionPolicy::default().target_rel_halfwidth * 100.0)]
    target_ci: f64,
    /// Confidence level of the interval.
    #[arg(long, default_value_t = RepetitionPolicy::default().ci_level)]
    ci_level: f64,
    /// `off`, `rapl` or `mock:<file>` with `t_seconds power_watts` lines.
    #[arg(long, default_value = "off")]
    energy: EnergySelection,
    /// Log destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also run (or allow) the large class.
    #[arg(long)]
    include_large: bool,
    /// No per-pair progress on standard error.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Summary,
    Scaling,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long, value_enum, default_value = "summary")]
    kind: ReportKind,
    /// Output directory. Summary goes to stdout and scaling charts are not
    /// written when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    #[arg(required = true)]
    logs: Vec<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListWhat {
    Benchmarks,
    Classes,
    Sizes,
}

#[derive(clap::Args)]
struct ListArgs {
    #[arg(value_enum)]
    what: ListWhat,
    /// Device profile for `sizes`.
    #[arg(long)]
    profile: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Failure(u8, anyhow::Error);

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure(EXIT_CONFIG, e.into())
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let benchmarks = if args.benchmarks == "all" {
        BenchmarkSelection::All
    } else {
        BenchmarkSelection::Named(args.benchmarks.split(',').map(|s| s.trim().to_string()).collect())
    };
    let policy = RepetitionPolicy::new(args.reps_min, args.reps_max, args.target_ci / 100.0, args.ci_level)
        .map_err(config)?;
    if policy.min_reps < 10 && !args.quiet {
        eprintln!("warning: fewer than 10 repetitions give weak confidence intervals");
    }
    let cfg = RunConfig {
        benchmarks,
        size_classes: args.classes,
        include_large: args.include_large,
        device_profile: args.profile,
        seed: args.seed,
        policy,
        energy: args.energy,
        output: args.out.clone(),
    };
    let resolved = harness::resolve(&cfg).map_err(config)?;
    let cal = calibration();
    if !args.quiet {
        eprintln!(
            "timer: overhead median {} ns, p99 {} ns, resolution {} ns",
            cal.overhead_median_ns, cal.overhead_p99_ns, cal.resolution_ns
        );
        if cal.overhead_exceeds_warning() {
            eprintln!("warning: timer overhead above {} ns", dwarfbench::chrono::OVERHEAD_WARN_NS);
        }
    }
    let quiet = args.quiet;
    let outcome = harness::execute(&resolved, |p| {
        if !quiet {
            eprintln!("{}", describe(p));
        }
    })
    .map_err(|e| Failure(if e.is_config_error() { EXIT_CONFIG } else { 1 }, e.into()))?;
    match &args.out {
        Some(path) => io::write_log(&outcome.log, path).map_err(config)?,
        None => io::write_log_to(&outcome.log, &mut std::io::stdout().lock()).map_err(config)?,
    }
    Ok(if outcome.verify_failures().next().is_some() { EXIT_VERIFY_FAILED } else { 0 })
}

fn describe(p: &PairReport) -> String {
    let head = format!("{:<9} {:<7}", p.benchmark.name(), p.class);
    match &p.status {
        PairStatus::Skipped(why) => format!("{head} skipped: {why}"),
        PairStatus::Completed { reps, verdict, ci_met } => format!(
            "{head} {reps:>3} reps  verify {} ({} {:.3e} <= {:.0e}){}",
            if verdict.passed { "pass" } else { "FAIL" },
            verdict.check,
            verdict.max_error,
            verdict.tolerance,
            if *ci_met == Some(false) { "  ci target unmet" } else { "" }
        ),
    }
}

fn report(args: ReportArgs) -> Result<u8, Failure> {
    let logs = args.logs.iter().map(|p| io::read_log(p)).collect::<Result<Vec<_>, _>>().map_err(config)?;
    let write = |name: &str, text: &str| -> Result<(), Failure> {
        let dir = args.out.as_deref().unwrap_or(Path::new("."));
        io::write_file(&dir.join(name), text.as_bytes()).map_err(config)
    };
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(config)?;
    }
    match args.kind {
        ReportKind::Summary => {
            let csv = summary_csv(&logs, args.ci_level).map_err(config)?;
            match args.out {
                Some(_) => write("summary.csv", &csv)?,
                None => print(&csv)?,
            }
        }
        ReportKind::Scaling => {
            let r = scaling_report(&logs).map_err(config)?;
            match args.out {
                Some(_) => {
                    write("scaling.csv", &r.csv)?;
                    for chart in &r.charts {
                        write(&format!("scaling-{}.svg", chart.benchmark), &chart.svg)?;
                    }
                }
                None => print(&r.csv)?,
            }
        }
    }
    Ok(0)
}

fn print(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(config)
}

fn list(args: ListArgs) -> Result<u8, Failure> {
    let mut text = String::new();
    match args.what {
        ListWhat::Benchmarks => Benchmark::ALL.iter().for_each(|b| text += &format!("{}\n", b.name())),
        ListWhat::Classes => SizeClass::ALL.iter().for_each(|c| text += &format!("{c}\n")),
        ListWhat::Sizes => {
            let profile = match &args.profile {
                Some(p) => io::load_profile(p).map_err(config)?,
                None => DeviceProfile::default(),
            };
            for (i, &b) in Benchmark::ALL.iter().enumerate() {
                if i > 0 {
                    text.push('\n');
                }
                match plan_for(b, &profile) {
                    Ok(plan) => text += &plan.to_kv_text(),
                    Err(e) => text += &format!("# {}: {e}\n", b.name()),
                }
            }
        }
    }
    print(&text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::List(a) => list(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
