//! The versioned plain-text run log.
//!
//! ```text
//! # format=1
//! # suite_version=0.1.0
//! # device=default
//! # seed=42
//! # <key>=<value>            (further metadata, sorted by key)
//! benchmark,size_class,device,region,rep,duration_ns,energy_uj,flags
//! lud,tiny,default,compute,0,18234,,
//! ```
//!
//! Keys, values and text fields are percent-encoded for `%`, `,`, `=`, `#`, CR
//! and LF, so any string survives a write/parse round trip. An empty
//! `energy_uj` means no reading. Flags are `|`-separated names.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use thiserror::Error;

use crate::model::{Region, Sample, SampleFlags, SizeClass};

pub const FORMAT_MAJOR: u32 = 1;
pub const COLUMNS: &str = "benchmark,size_class,device,region,rep,duration_ns,energy_uj,flags";
const RESERVED_KEYS: [&str; 4] = ["format", "suite_version", "device", "seed"];

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("unsupported log format version {found:?} (expected major {FORMAT_MAJOR})")]
    VersionMismatch { found: Option<String> },
    #[error("header key `{0}` is reserved")]
    ReservedKey(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormatVersion {
    pub major: u32,
    pub minor: u32,
}

impl FormatVersion {
    pub const CURRENT: FormatVersion = FormatVersion { major: FORMAT_MAJOR, minor: 0 };

    fn parse(s: &str) -> Option<Self> {
        let (major, minor) = match s.split_once('.') {
            Some((a, b)) => (a.parse().ok()?, b.parse().ok()?),
            None => (s.parse().ok()?, 0),
        };
        Some(Self { major, minor })
    }
}

impl fmt::Display for FormatVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.minor == 0 {
            write!(f, "{}", self.major)
        } else {
            write!(f, "{}.{}", self.major, self.minor)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogHeader {
    pub format: FormatVersion,
    pub suite_version: String,
    pub device: String,
    pub seed: u64,
    extra: BTreeMap<String, String>,
}

impl LogHeader {
    pub fn new(suite_version: impl Into<String>, device: impl Into<String>, seed: u64) -> Self {
        Self {
            format: FormatVersion::CURRENT,
            suite_version: suite_version.into(),
            device: device.into(),
            seed,
            extra: BTreeMap::new(),
        }
    }

    /// Adds or replaces a metadata entry. The four mandatory keys are fields
    /// and cannot be set here.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<(), LogError> {
        let key = key.into();
        if RESERVED_KEYS.contains(&key.as_str()) {
            return Err(LogError::ReservedKey(key));
        }
        self.extra.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.extra.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.extra.remove(key)
    }

    pub fn extra(&self) -> impl Iterator<Item = (&str, &str)> {
        self.extra.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunLog {
    pub header: LogHeader,
    pub records: Vec<Sample>,
}

impl RunLog {
    pub fn new(header: LogHeader) -> Self {
        Self { header, records: Vec::new() }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        write_log(self, &mut s).expect("writing to a String cannot fail");
        s
    }
}

fn needs_escape(c: char) -> bool {
    matches!(c, '%' | ',' | '=' | '#' | '\n' | '\r')
}

pub fn encode_field(s: &str) -> String {
    if !s.contains(needs_escape) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 8);
    for c in s.chars() {
        if needs_escape(c) {
            let _ = write!(out, "%{:02X}", c as u32);
        } else {
            out.push(c);
        }
    }
    out
}

pub fn decode_field(s: &str) -> Option<String> {
    if !s.contains('%') {
        return Some(s.to_string());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = bytes.get(i + 1..i + 3)?;
            let hex = core::str::from_utf8(hex).ok()?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

/// Writes `log` in the format above.
pub fn write_log(log: &RunLog, out: &mut impl Write) -> fmt::Result {
    let h = &log.header;
    writeln!(out, "# format={}", h.format)?;
    writeln!(out, "# suite_version={}", encode_field(&h.suite_version))?;
    writeln!(out, "# device={}", encode_field(&h.device))?;
    writeln!(out, "# seed={}", h.seed)?;
    for (k, v) in &h.extra {
        writeln!(out, "# {}={}", encode_field(k), encode_field(v))?;
    }
    writeln!(out, "{COLUMNS}")?;
    for s in &log.records {
        write_record(s, out)?;
    }
    Ok(())
}

/// Writes the records as CSV with the column header and no metadata.
pub fn write_csv(records: &[Sample], out: &mut impl Write) -> fmt::Result {
    writeln!(out, "{COLUMNS}")?;
    records.iter().try_for_each(|s| write_record(s, out))
}

fn write_record(s: &Sample, out: &mut impl Write) -> fmt::Result {
    write!(
        out,
        "{},{},{},{},{},{},",
        encode_field(&s.benchmark),
        s.size_class,
        encode_field(&s.device),
        s.region,
        s.repetition,
        s.duration_ns
    )?;
    if let Some(e) = s.energy_uj {
        write!(out, "{e}")?;
    }
    writeln!(out, ",{}", s.flags)
}

fn header_err(line: usize, reason: impl Into<String>) -> LogError {
    LogError::MalformedHeader { line, reason: reason.into() }
}

fn record_err(line: usize, reason: impl Into<String>) -> LogError {
    LogError::MalformedRecord { line, reason: reason.into() }
}

fn parse_record(line_no: usize, line: &str) -> Result<Sample, LogError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 8 {
        return Err(record_err(line_no, format!("expected 8 fields, found {}", fields.len())));
    }
    let text = |i: usize| decode_field(fields[i]).ok_or_else(|| record_err(line_no, "bad percent escape"));
    let num = |i: usize, what: &str| {
        fields[i].parse::<u64>().map_err(|_| record_err(line_no, format!("{what} is not an integer")))
    };
    let size_class: SizeClass = fields[1].parse().map_err(|e| record_err(line_no, format!("{e}")))?;
    let region: Region = fields[3].parse().map_err(|e| record_err(line_no, format!("{e}")))?;
    let repetition = fields[4].parse::<u32>().map_err(|_| record_err(line_no, "rep is not an integer"))?;
    let energy_uj = if fields[6].is_empty() { None } else { Some(num(6, "energy_uj")?) };
    let flags: SampleFlags = fields[7].parse().map_err(|e| record_err(line_no, format!("{e}")))?;
    Ok(Sample {
        benchmark: text(0)?,
        size_class,
        device: text(2)?,
        region,
        repetition,
        duration_ns: num(5, "duration_ns")?,
        energy_uj,
        flags,
    })
}

/// Parses a log. Never panics; every defect is reported as an error.
pub fn parse_log(bytes: &[u8]) -> Result<RunLog, LogError> {
    let mut lines = bytes.split(|&b| b == b'\n').enumerate().peekable();
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut columns_seen = false;
    for (idx, raw) in lines.by_ref() {
        let line_no = idx + 1;
        let line = core::str::from_utf8(raw).map_err(|_| header_err(line_no, "not UTF-8"))?;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.strip_prefix(' ').ok_or_else(|| header_err(line_no, "expected `# key=value`"))?;
            let (k, v) = rest.split_once('=').ok_or_else(|| header_err(line_no, "expected `key=value`"))?;
            let k = decode_field(k).ok_or_else(|| header_err(line_no, "bad percent escape"))?;
            let v = decode_field(v).ok_or_else(|| header_err(line_no, "bad percent escape"))?;
            if entries.iter().any(|(_, key, _)| *key == k) {
                return Err(header_err(line_no, format!("duplicate key `{k}`")));
            }
            entries.push((line_no, k, v));
        } else if line == COLUMNS {
            columns_seen = true;
            break;
        } else {
            return Err(header_err(line_no, "expected the column header"));
        }
    }
    let take = |key: &str| entries.iter().position(|(_, k, _)| k == key).map(|i| entries[i].clone());
    let format = match take("format") {
        None => return Err(LogError::VersionMismatch { found: None }),
        Some((_, _, v)) => match FormatVersion::parse(&v) {
            Some(f) if f.major == FORMAT_MAJOR => f,
            _ => return Err(LogError::VersionMismatch { found: Some(v) }),
        },
    };
    if !columns_seen {
        return Err(header_err(entries.len() + 1, "missing column header"));
    }
    let last_header_line = entries.last().map_or(1, |e| e.0);
    let required = |key: &'static str| {
        take(key).map(|(_, _, v)| v).ok_or_else(|| header_err(last_header_line, format!("missing `{key}`")))
    };
    let suite_version = required("suite_version")?;
    let device = required("device")?;
    let (seed_line, _, seed) = take("seed").ok_or_else(|| header_err(last_header_line, "missing `seed`"))?;
    let seed: u64 = seed.parse().map_err(|_| header_err(seed_line, "seed is not a u64"))?;
    let mut header = LogHeader { format, suite_version, device, seed, extra: BTreeMap::new() };
    for (_, k, v) in entries {
        if !RESERVED_KEYS.contains(&k.as_str()) {
            header.extra.insert(k, v);
        }
    }

    let mut records = Vec::new();
    while let Some((idx, raw)) = lines.next() {
        let line_no = idx + 1;
        if raw.is_empty() && lines.peek().is_none() {
            break;
        }
        let line = core::str::from_utf8(raw).map_err(|_| record_err(line_no, "not UTF-8"))?;
        let line = line.strip_suffix('\r').unwrap_or(line);
        records.push(parse_record(line_no, line)?);
    }
    Ok(RunLog { header, records })
}
