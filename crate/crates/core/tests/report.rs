use dwarfbench_core::log::{LogHeader, RunLog};
use dwarfbench_core::report::{scaling_report, summary_csv, ReportError, PLOT_BOTTOM};
use dwarfbench_core::{Region, Sample, SampleFlags, SizeClass};

fn synthetic(device: &str, durations: &[(SizeClass, u64)]) -> RunLog {
    let mut log = RunLog::new(LogHeader::new("0.1.0", device, 7));
    for &(class, base) in durations {
        for rep in 0..5u32 {
            for region in Region::ALL {
                let d = if region == Region::Compute { base } else { 3 };
                log.records.push(Sample {
                    benchmark: "lud".into(),
                    size_class: class,
                    device: device.into(),
                    region,
                    repetition: rep,
                    duration_ns: d + u64::from(rep % 2),
                    energy_uj: None,
                    flags: SampleFlags::empty(),
                });
            }
        }
    }
    log
}

fn ordinates(svg: &str, device: &str) -> Vec<f64> {
    let tag = svg.split(&format!("data-device=\"{device}\" points=\"")).nth(1).unwrap();
    tag.split('"').next().unwrap().split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

#[test]
fn summary_has_one_row_per_class_and_region() {
    let log = synthetic("d", &[(SizeClass::Tiny, 100), (SizeClass::Small, 400)]);
    let csv = summary_csv(&[log], 0.95).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * Region::ALL.len());
}

#[test]
fn ten_times_the_duration_is_ten_times_the_height() {
    let log = synthetic("d", &[(SizeClass::Tiny, 1_000), (SizeClass::Small, 4_000), (SizeClass::Medium, 10_000)]);
    let report = scaling_report(&[log]).unwrap();
    let ys = ordinates(&report.charts[0].svg, "d");
    let ratio = (PLOT_BOTTOM - ys[2]) / (PLOT_BOTTOM - ys[0]);
    // Medians are 1000 and 10000 plus the same rep-parity offset.
    let want = 10_000.0 / 1_000.0;
    assert!((ratio - want).abs() < 0.01, "{ratio}");
}

#[test]
fn scaling_keys_rows_by_device() {
    let a = synthetic("alpha", &[(SizeClass::Tiny, 10), (SizeClass::Small, 20)]);
    let b = synthetic("beta", &[(SizeClass::Tiny, 30), (SizeClass::Small, 90)]);
    let report = scaling_report(&[a, b]).unwrap();
    let devices: Vec<&str> = report.csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(devices, ["alpha", "alpha", "beta", "beta"]);
    assert!(report.csv.starts_with("device,"));
    assert_eq!(ordinates(&report.charts[0].svg, "beta").len(), 2);
}

#[test]
fn report_errors() {
    assert_eq!(scaling_report(&[]).unwrap_err(), ReportError::EmptyLogs);
    let a = synthetic("a", &[]);
    let mut b = synthetic("b", &[]);
    b.header.format.minor = 1;
    assert!(matches!(summary_csv(&[a, b], 0.95), Err(ReportError::MixedFormatVersions { .. })));
}
