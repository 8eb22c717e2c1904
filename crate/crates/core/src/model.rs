//! Shared vocabulary: size classes, device profiles, regions, benchmark
//! descriptors and timed samples.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use bitflags::bitflags;
use thiserror::Error;

use crate::kv::{KvDocument, KvError};

/// Problem-size class, each one aimed at a level of the memory hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SizeClass {
    Tiny,
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 4] = [Self::Tiny, Self::Small, Self::Medium, Self::Large];

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Tiny => "tiny",
            Self::Small => "small",
            Self::Medium => "medium",
            Self::Large => "large",
        }
    }

    /// The next-smaller class, if any.
    pub const fn smaller(self) -> Option<SizeClass> {
        match self {
            Self::Tiny => None,
            Self::Small => Some(Self::Tiny),
            Self::Medium => Some(Self::Small),
            Self::Large => Some(Self::Medium),
        }
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownName {
    pub kind: &'static str,
    pub value: String,
}

impl FromStr for SizeClass {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownName { kind: "size class", value: s.to_string() })
    }
}

/// A timed phase of one benchmark repetition.
///
/// The portable kernels have no device transfers; `TransferIn` and
/// `TransferOut` time the packing of inputs into working buffers and the
/// unpacking of results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Setup,
    TransferIn,
    Compute,
    TransferOut,
    Teardown,
}

impl Region {
    pub const ALL: [Region; 5] =
        [Self::Setup, Self::TransferIn, Self::Compute, Self::TransferOut, Self::Teardown];

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Setup => "setup",
            Self::TransferIn => "transfer_in",
            Self::Compute => "compute",
            Self::TransferOut => "transfer_out",
            Self::Teardown => "teardown",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownName { kind: "region", value: s.to_string() })
    }
}

/// Berkeley dwarf taxonomy label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DwarfClass {
    DenseLinearAlgebra,
    SparseLinearAlgebra,
    Spectral,
    DynamicProgramming,
    MapReduce,
    CombinationalLogic,
    GraphTraversal,
    StructuredGrid,
}

impl DwarfClass {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::DenseLinearAlgebra => "dense-linear-algebra",
            Self::SparseLinearAlgebra => "sparse-linear-algebra",
            Self::Spectral => "spectral",
            Self::DynamicProgramming => "dynamic-programming",
            Self::MapReduce => "map-reduce",
            Self::CombinationalLogic => "combinational-logic",
            Self::GraphTraversal => "graph-traversal",
            Self::StructuredGrid => "structured-grid",
        }
    }
}

impl fmt::Display for DwarfClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identity of one of the implemented kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Benchmark {
    Bfs,
    Crc32,
    CsrSpmv,
    Fft,
    Kmeans,
    Lud,
    Nw,
    Srad,
}

impl Benchmark {
    pub const ALL: [Benchmark; 8] = [
        Self::Bfs,
        Self::Crc32,
        Self::CsrSpmv,
        Self::Fft,
        Self::Kmeans,
        Self::Lud,
        Self::Nw,
        Self::Srad,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            Self::Bfs => "bfs",
            Self::Crc32 => "crc32",
            Self::CsrSpmv => "csr_spmv",
            Self::Fft => "fft",
            Self::Kmeans => "kmeans",
            Self::Lud => "lud",
            Self::Nw => "nw",
            Self::Srad => "srad",
        }
    }

    pub fn spec(self) -> &'static BenchmarkSpec {
        crate::registry::spec_of(self)
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive integer bounds for one size parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub min: u64,
    pub max: u64,
}

/// Static description of a registered benchmark.
#[derive(Debug, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub benchmark: Benchmark,
    pub name: &'static str,
    pub dwarf_class: DwarfClass,
    pub params: &'static [ParamSpec],
    /// Parameter grown by the size solver; the others are derived from it.
    pub growth_param: &'static str,
    /// Regions emitted per repetition, in emission order.
    pub regions: &'static [Region],
}

impl BenchmarkSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// A concrete assignment of size parameters, kept in schema order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Params {
    entries: Vec<(&'static str, u64)>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `name`, replacing any previous value.
    pub fn with(mut self, name: &'static str, value: u64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &'static str, value: u64) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((name, value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.entries.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, u64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, value)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{name}={value}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("budget `{field}` must be positive, got {value}")]
    NonPositiveBudget { field: &'static str, value: i128 },
    #[error("budgets must strictly increase: {lower} ({lower_value}) >= {upper} ({upper_value})")]
    OrderingViolation {
        lower: &'static str,
        lower_value: u64,
        upper: &'static str,
        upper_value: u64,
    },
    #[error("device profile id must not be empty")]
    EmptyId,
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` is not an integer: `{value}`")]
    InvalidNumber { line: usize, key: String, value: String },
    #[error(transparent)]
    Syntax(#[from] KvError),
}

/// Unvalidated profile fields, as read from configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawDeviceProfile {
    pub id: String,
    pub description: String,
    pub l1_bytes: i128,
    pub llc_bytes: i128,
    pub dram_bytes: i128,
}

/// Memory-hierarchy budgets of a target device. Budgets strictly increase
/// from L1 to last-level cache to DRAM.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeviceProfile {
    id: String,
    description: String,
    l1_bytes: u64,
    llc_bytes: u64,
    dram_bytes: u64,
}

pub const DEFAULT_L1_BYTES: u64 = 32 * 1024;
pub const DEFAULT_LLC_BYTES: u64 = 8 * 1024 * 1024;
pub const DEFAULT_DRAM_BYTES: u64 = 16 * 1024 * 1024 * 1024;

impl Default for DeviceProfile {
    fn default() -> Self {
        Self {
            id: "default".to_string(),
            description: "generic host: 32 KiB L1, 8 MiB LLC, 16 GiB DRAM".to_string(),
            l1_bytes: DEFAULT_L1_BYTES,
            llc_bytes: DEFAULT_LLC_BYTES,
            dram_bytes: DEFAULT_DRAM_BYTES,
        }
    }
}

fn positive(field: &'static str, value: i128) -> Result<u64, ProfileError> {
    if value <= 0 || value > u64::MAX as i128 {
        return Err(ProfileError::NonPositiveBudget { field, value });
    }
    Ok(value as u64)
}

/// Checks budgets and builds a [`DeviceProfile`].
pub fn validate_device_profile(raw: &RawDeviceProfile) -> Result<DeviceProfile, ProfileError> {
    let l1 = positive("l1_bytes", raw.l1_bytes)?;
    let llc = positive("llc_bytes", raw.llc_bytes)?;
    let dram = positive("dram_bytes", raw.dram_bytes)?;
    if l1 >= llc {
        return Err(ProfileError::OrderingViolation {
            lower: "l1_bytes",
            lower_value: l1,
            upper: "llc_bytes",
            upper_value: llc,
        });
    }
    if llc >= dram {
        return Err(ProfileError::OrderingViolation {
            lower: "llc_bytes",
            lower_value: llc,
            upper: "dram_bytes",
            upper_value: dram,
        });
    }
    if raw.id.trim().is_empty() {
        return Err(ProfileError::EmptyId);
    }
    Ok(DeviceProfile {
        id: raw.id.clone(),
        description: raw.description.clone(),
        l1_bytes: l1,
        llc_bytes: llc,
        dram_bytes: dram,
    })
}

impl DeviceProfile {
    pub fn new(
        id: impl Into<String>,
        l1_bytes: u64,
        llc_bytes: u64,
        dram_bytes: u64,
    ) -> Result<Self, ProfileError> {
        validate_device_profile(&RawDeviceProfile {
            id: id.into(),
            description: String::new(),
            l1_bytes: l1_bytes.into(),
            llc_bytes: llc_bytes.into(),
            dram_bytes: dram_bytes.into(),
        })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn l1_bytes(&self) -> u64 {
        self.l1_bytes
    }

    pub fn llc_bytes(&self) -> u64 {
        self.llc_bytes
    }

    pub fn dram_bytes(&self) -> u64 {
        self.dram_bytes
    }

    /// Parses the `key=value` profile format (`id`, `description`,
    /// `l1_bytes`, `llc_bytes`, `dram_bytes`; `#` starts a comment).
    pub fn from_kv_text(text: &str) -> Result<Self, ProfileError> {
        let doc = KvDocument::parse(text)?;
        let mut raw = RawDeviceProfile::default();
        let mut seen = [false; 3];
        let mut has_id = false;
        for entry in doc.entries() {
            let slot = match entry.key.as_str() {
                "id" => {
                    raw.id = entry.value.clone();
                    has_id = true;
                    continue;
                }
                "description" => {
                    raw.description = entry.value.clone();
                    continue;
                }
                "l1_bytes" => 0,
                "llc_bytes" => 1,
                "dram_bytes" => 2,
                other => {
                    return Err(ProfileError::UnknownKey { line: entry.line, key: other.to_string() })
                }
            };
            let value: i128 = entry.value.trim().parse().map_err(|_| ProfileError::InvalidNumber {
                line: entry.line,
                key: entry.key.clone(),
                value: entry.value.clone(),
            })?;
            match slot {
                0 => raw.l1_bytes = value,
                1 => raw.llc_bytes = value,
                _ => raw.dram_bytes = value,
            }
            seen[slot] = true;
        }
        if !has_id {
            return Err(ProfileError::MissingKey("id"));
        }
        for (slot, name) in ["l1_bytes", "llc_bytes", "dram_bytes"].into_iter().enumerate() {
            if !seen[slot] {
                return Err(ProfileError::MissingKey(name));
            }
        }
        validate_device_profile(&raw)
    }

    pub fn to_kv_text(&self) -> String {
        let mut doc = KvDocument::new();
        doc.push("id", &self.id);
        if !self.description.is_empty() {
            doc.push("description", &self.description);
        }
        doc.push("l1_bytes", &self.l1_bytes.to_string());
        doc.push("llc_bytes", &self.llc_bytes.to_string());
        doc.push("dram_bytes", &self.dram_bytes.to_string());
        doc.render()
    }

    /// Stable fingerprint of the budgets and id, hex encoded.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.id.as_bytes());
        hasher.update([0]);
        for budget in [self.l1_bytes, self.llc_bytes, self.dram_bytes] {
            hasher.update(budget.to_le_bytes());
        }
        crate::kv::hex(&hasher.finalize()[..8])
    }
}

bitflags! {
    /// Per-sample status bits carried in the log's `flags` column.
    #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
    pub struct SampleFlags: u8 {
        /// The final output of this (benchmark, class) failed verification.
        const VERIFY_FAILED = 1;
        /// An energy provider was configured but gave no reading.
        const ENERGY_UNAVAILABLE = 1 << 1;
        /// The repetition policy hit max_reps before reaching its CI target.
        const CI_UNMET = 1 << 2;
    }
}

const FLAG_NAMES: [(SampleFlags, &str); 3] = [
    (SampleFlags::VERIFY_FAILED, "verify_failed"),
    (SampleFlags::ENERGY_UNAVAILABLE, "energy_unavailable"),
    (SampleFlags::CI_UNMET, "ci_unmet"),
];

impl fmt::Display for SampleFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (flag, name) in FLAG_NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl FromStr for SampleFlags {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut flags = SampleFlags::empty();
        if s.is_empty() {
            return Ok(flags);
        }
        for part in s.split('|') {
            let (flag, _) = FLAG_NAMES
                .iter()
                .find(|(_, name)| *name == part)
                .ok_or_else(|| UnknownName { kind: "flag", value: part.to_string() })?;
            flags |= *flag;
        }
        Ok(flags)
    }
}

/// One timed observation of one region of one repetition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sample {
    pub benchmark: String,
    pub size_class: SizeClass,
    pub device: String,
    pub region: Region,
    pub repetition: u32,
    pub duration_ns: u64,
    pub energy_uj: Option<u64>,
    pub flags: SampleFlags,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(l1: i128, llc: i128, dram: i128) -> RawDeviceProfile {
        RawDeviceProfile {
            id: "dev".into(),
            description: String::new(),
            l1_bytes: l1,
            llc_bytes: llc,
            dram_bytes: dram,
        }
    }

    #[test]
    fn valid_profile() {
        let p = validate_device_profile(&raw(32768, 8388608, 17179869184)).unwrap();
        assert_eq!(p.l1_bytes(), 32768);
        assert_eq!(p.dram_bytes(), 17179869184);
    }

    #[test]
    fn equal_budgets_break_ordering() {
        let err = validate_device_profile(&raw(32768, 32768, 1_000_000_000)).unwrap_err();
        assert!(matches!(err, ProfileError::OrderingViolation { lower: "l1_bytes", .. }));
        let err = validate_device_profile(&raw(1, 100, 100)).unwrap_err();
        assert!(matches!(err, ProfileError::OrderingViolation { lower: "llc_bytes", .. }));
    }

    #[test]
    fn zero_budget_is_rejected() {
        let err = validate_device_profile(&raw(0, 8388608, 1_000_000_000)).unwrap_err();
        assert_eq!(err, ProfileError::NonPositiveBudget { field: "l1_bytes", value: 0 });
        let err = validate_device_profile(&raw(10, -4, 1_000_000_000)).unwrap_err();
        assert!(matches!(err, ProfileError::NonPositiveBudget { field: "llc_bytes", .. }));
    }

    #[test]
    fn default_profile_is_valid() {
        let d = DeviceProfile::default();
        assert!(DeviceProfile::new(d.id(), d.l1_bytes(), d.llc_bytes(), d.dram_bytes()).is_ok());
    }

    #[test]
    fn profile_text_round_trip() {
        let text = "# bench box\nid=box-1\ndescription=two socket, 24 cores\nl1_bytes=49152\n\
                    llc_bytes = 33554432\ndram_bytes=68719476736\n";
        let p = DeviceProfile::from_kv_text(text).unwrap();
        assert_eq!(p.id(), "box-1");
        assert_eq!(p.llc_bytes(), 33554432);
        assert_eq!(DeviceProfile::from_kv_text(&p.to_kv_text()).unwrap(), p);
    }

    #[test]
    fn profile_text_errors() {
        assert_eq!(
            DeviceProfile::from_kv_text("id=a\nl1_bytes=1\nllc_bytes=2\n"),
            Err(ProfileError::MissingKey("dram_bytes"))
        );
        assert!(matches!(
            DeviceProfile::from_kv_text("id=a\nl2_bytes=1\n"),
            Err(ProfileError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            DeviceProfile::from_kv_text("id=a\nl1_bytes=lots\n"),
            Err(ProfileError::InvalidNumber { line: 2, .. })
        ));
        assert!(matches!(
            DeviceProfile::from_kv_text("id=a\nl1_bytes=0\nllc_bytes=2\ndram_bytes=3\n"),
            Err(ProfileError::NonPositiveBudget { .. })
        ));
    }

    #[test]
    fn size_classes_are_ordered() {
        assert!(SizeClass::Tiny < SizeClass::Small);
        assert!(SizeClass::Small < SizeClass::Medium);
        assert!(SizeClass::Medium < SizeClass::Large);
        for c in SizeClass::ALL {
            assert_eq!(c.as_str().parse::<SizeClass>().unwrap(), c);
        }
    }

    #[test]
    fn flags_text() {
        let f = SampleFlags::VERIFY_FAILED | SampleFlags::CI_UNMET;
        assert_eq!(f.to_string(), "verify_failed|ci_unmet");
        assert_eq!("verify_failed|ci_unmet".parse::<SampleFlags>().unwrap(), f);
        assert_eq!("".parse::<SampleFlags>().unwrap(), SampleFlags::empty());
        assert!("bogus".parse::<SampleFlags>().is_err());
    }
}
