//! Summary and scaling reports over one or more run logs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::log::{FormatVersion, RunLog};
use crate::model::{Region, SampleFlags, SizeClass};
use crate::stats::{summarize_series, StatsError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ReportError {
    #[error("no logs given")]
    EmptyLogs,
    #[error("logs use different format versions ({first} and {other})")]
    MixedFormatVersions { first: FormatVersion, other: FormatVersion },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub const SUMMARY_COLUMNS: &str = "device,benchmark,size_class,region,n,mean_ns,median_ns,min_ns,max_ns,\
stddev_ns,ci_low_ns,ci_high_ns,ci_level,outliers,lag1,autocorrelation_warning,mean_energy_uj,flags";
pub const SCALING_COLUMNS: &str = "device,benchmark,size_class,median_compute_ns,ratio_to_first";

/// Chart geometry. Ordinates are linear with the baseline at `PLOT_BOTTOM`,
/// so `PLOT_BOTTOM - y` is proportional to the plotted value.
pub const CHART_WIDTH: f64 = 480.0;
pub const CHART_HEIGHT: f64 = 300.0;
pub const PLOT_LEFT: f64 = 70.0;
pub const PLOT_RIGHT: f64 = 450.0;
pub const PLOT_TOP: f64 = 30.0;
pub const PLOT_BOTTOM: f64 = 260.0;

fn check_logs(logs: &[RunLog]) -> Result<(), ReportError> {
    let first = logs.first().ok_or(ReportError::EmptyLogs)?.header.format;
    match logs.iter().find(|l| l.header.format != first) {
        Some(l) => Err(ReportError::MixedFormatVersions { first, other: l.header.format }),
        None => Ok(()),
    }
}

type GroupKey = (String, String, SizeClass, Region);

#[derive(Default)]
struct Group {
    series: Vec<(u32, u64)>,
    energy: Vec<u64>,
    flags: SampleFlags,
}

fn group(logs: &[RunLog]) -> BTreeMap<GroupKey, Group> {
    let mut groups: BTreeMap<GroupKey, Group> = BTreeMap::new();
    for s in logs.iter().flat_map(|l| &l.records) {
        let g = groups.entry((s.device.clone(), s.benchmark.clone(), s.size_class, s.region)).or_default();
        g.series.push((s.repetition, s.duration_ns));
        g.energy.extend(s.energy_uj);
        g.flags |= s.flags;
    }
    for g in groups.values_mut() {
        g.series.sort_by_key(|&(rep, _)| rep);
    }
    groups
}

fn csv_text(s: &str) -> String {
    crate::log::encode_field(s)
}

/// One row per (device, benchmark, class, region), sorted on those keys.
pub fn summary_csv(logs: &[RunLog], ci_level: f64) -> Result<String, ReportError> {
    check_logs(logs)?;
    let mut out = String::new();
    out.push_str(SUMMARY_COLUMNS);
    out.push('\n');
    for ((device, bench, class, region), g) in group(logs) {
        let values: Vec<f64> = g.series.iter().map(|&(_, d)| d as f64).collect();
        let s = summarize_series(&values, ci_level)?;
        let energy = if g.energy.is_empty() {
            String::new()
        } else {
            (g.energy.iter().map(|&e| e as f64).sum::<f64>() / g.energy.len() as f64).to_string()
        };
        let lag1 = s.lag1.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{class},{region},{},{},{},{},{},{},{},{},{},{},{lag1},{},{energy},{}",
            csv_text(&device),
            csv_text(&bench),
            s.n,
            s.mean_ns,
            s.median_ns,
            s.min_ns,
            s.max_ns,
            s.stddev_ns,
            s.ci_low_ns,
            s.ci_high_ns,
            s.ci_level,
            s.outliers,
            s.autocorrelation_warning(),
            g.flags
        );
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingPoint {
    pub device: String,
    pub benchmark: String,
    pub size_class: SizeClass,
    pub median_compute_ns: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub benchmark: String,
    pub svg: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub csv: String,
    pub charts: Vec<Chart>,
}

/// Median compute-region duration per (device, benchmark, class), as CSV and
/// one SVG line chart per benchmark.
pub fn scaling_report(logs: &[RunLog]) -> Result<ScalingReport, ReportError> {
    check_logs(logs)?;
    let mut points = Vec::new();
    for ((device, benchmark, size_class, region), g) in group(logs) {
        if region != Region::Compute {
            continue;
        }
        let values: Vec<f64> = g.series.iter().map(|&(_, d)| d as f64).collect();
        let median_compute_ns = summarize_series(&values, 0.95)?.median_ns;
        points.push(ScalingPoint { device, benchmark, size_class, median_compute_ns });
    }

    let mut csv = String::from(SCALING_COLUMNS);
    csv.push('\n');
    let mut base: Option<(&str, &str, f64)> = None;
    for p in &points {
        let first = match base {
            Some((d, b, v)) if d == p.device && b == p.benchmark => v,
            _ => {
                base = Some((&p.device, &p.benchmark, p.median_compute_ns));
                p.median_compute_ns
            }
        };
        let ratio = if first > 0.0 { p.median_compute_ns / first } else { f64::NAN };
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            csv_text(&p.device),
            csv_text(&p.benchmark),
            p.size_class,
            p.median_compute_ns,
            ratio
        );
    }

    let benchmarks: BTreeSet<&str> = points.iter().map(|p| p.benchmark.as_str()).collect();
    let charts = benchmarks
        .into_iter()
        .map(|b| Chart {
            benchmark: b.to_string(),
            svg: chart(b, points.iter().filter(|p| p.benchmark == b)),
        })
        .collect();
    Ok(ScalingReport { points, csv, charts })
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn chart<'a>(benchmark: &str, points: impl Iterator<Item = &'a ScalingPoint>) -> String {
    let points: Vec<&ScalingPoint> = points.collect();
    let classes: Vec<SizeClass> =
        SizeClass::ALL.into_iter().filter(|c| points.iter().any(|p| p.size_class == *c)).collect();
    let max = points.iter().map(|p| p.median_compute_ns).fold(0.0, f64::max);
    let x_of = |c: SizeClass| {
        let i = classes.iter().position(|&k| k == c).unwrap_or(0);
        if classes.len() <= 1 {
            0.5 * (PLOT_LEFT + PLOT_RIGHT)
        } else {
            PLOT_LEFT + (PLOT_RIGHT - PLOT_LEFT) * i as f64 / (classes.len() - 1) as f64
        }
    };
    let y_of = |v: f64| if max > 0.0 { PLOT_BOTTOM - (PLOT_BOTTOM - PLOT_TOP) * v / max } else { PLOT_BOTTOM };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" viewBox="0 0 {CHART_WIDTH} {CHART_HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<title>{} median compute duration</title>"#, xml_escape(benchmark));
    let _ = writeln!(svg, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, CHART_WIDTH / 2.0, xml_escape(benchmark));
    let _ = writeln!(
        svg,
        r#"<path d="M{PLOT_LEFT} {PLOT_TOP} V{PLOT_BOTTOM} H{PLOT_RIGHT}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{PLOT_LEFT}" y="{}" text-anchor="end" dx="-4">{max:.0} ns</text>"#, PLOT_TOP + 4.0);
    let _ = writeln!(svg, r#"<text x="{PLOT_LEFT}" y="{}" text-anchor="end" dx="-4">0</text>"#, PLOT_BOTTOM + 4.0);
    for &c in &classes {
        let _ = writeln!(svg, r#"<text x="{:.3}" y="{}" text-anchor="middle">{c}</text>"#, x_of(c), PLOT_BOTTOM + 16.0);
    }
    let devices: BTreeSet<&str> = points.iter().map(|p| p.device.as_str()).collect();
    for (i, device) in devices.into_iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut series: Vec<&&ScalingPoint> = points.iter().filter(|p| p.device == device).collect();
        series.sort_by_key(|p| p.size_class);
        let coords: Vec<String> = series
            .iter()
            .map(|p| alloc::format!("{:.3},{:.3}", x_of(p.size_class), y_of(p.median_compute_ns)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-device="{}" points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            xml_escape(device),
            coords.join(" ")
        );
        for p in &series {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{colour}"><title>{} {}: {} ns</title></circle>"#,
                x_of(p.size_class),
                y_of(p.median_compute_ns),
                xml_escape(device),
                p.size_class,
                p.median_compute_ns
            );
        }
        let ly = PLOT_TOP + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{colour}" text-anchor="end">{}</text>"#,
            PLOT_RIGHT,
            xml_escape(device)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
