//! The eight dwarf kernels.
//!
//! Every kernel has a seeded generator, an instrumented `run` that emits its
//! declared regions in order through a [`RegionRecorder`], and a `verify`
//! that checks the output against an independent reference computation.
//! Elements are 32-bit; reductions accumulate in 64-bit.

pub mod bfs;
pub mod crc32;
pub mod csr_spmv;
pub mod fft;
pub mod kmeans;
pub mod lud;
pub mod nw;
pub mod srad;

use alloc::string::String;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::measure::RegionRecorder;
use crate::model::{Benchmark, Params};
use crate::rng::SplitMix64;
use crate::sizing::{self, SizingError};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DwarfError {
    #[error("pivot {index} is (near) zero")]
    SingularPivot { index: usize },
    #[error("malformed CSR matrix: {0}")]
    MalformedCsr(&'static str),
    #[error("length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("alignment needs two non-empty sequences")]
    EmptySequence,
    #[error("k = {k} exceeds the {points} points")]
    KTooLarge { k: usize, points: usize },
    #[error("source node {node} out of range for {nodes} nodes")]
    SourceOutOfRange { node: usize, nodes: usize },
    #[error("malformed graph: {0}")]
    MalformedGraph(&'static str),
    #[error("intensity at index {index} is not positive")]
    NonPositiveIntensity { index: usize },
    #[error("lambda must be in (0, 1]")]
    BadLambda,
    #[error("{0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Sizing(#[from] SizingError),
}

/// Outcome of checking a kernel's output against its reference.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    /// The checked quantity (relative error, mismatch count, ...).
    pub max_error: f64,
    pub tolerance: f64,
    pub check: &'static str,
}

impl Verdict {
    pub(crate) fn check(check: &'static str, max_error: f64, tolerance: f64, passed: bool) -> Self {
        Self { passed, max_error, tolerance, check }
    }

    pub(crate) fn fail(check: &'static str) -> Self {
        Self { passed: false, max_error: f64::INFINITY, tolerance: 0.0, check }
    }
}

/// max |got − want| / max |want| (absolute when the reference is all zero).
pub(crate) fn max_rel_error(got: impl Iterator<Item = f64>, want: impl Iterator<Item = f64>) -> f64 {
    let (mut diff, mut scale) = (0f64, 0f64);
    for (g, w) in got.zip(want) {
        diff = diff.max((g - w).abs());
        scale = scale.max(w.abs());
    }
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelInput {
    Bfs(bfs::BfsInput),
    Crc32(crc32::Crc32Input),
    CsrSpmv(csr_spmv::SpmvInput),
    Fft(fft::FftInput),
    Kmeans(kmeans::KmeansInput),
    Lud(lud::LudInput),
    Nw(nw::NwInput),
    Srad(srad::SradInput),
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelOutput {
    Bfs(bfs::BfsOutput),
    Crc32(crc32::Crc32Output),
    CsrSpmv(csr_spmv::SpmvOutput),
    Fft(fft::FftOutput),
    Kmeans(kmeans::KmeansOutput),
    Lud(lud::LudOutput),
    Nw(nw::NwOutput),
    Srad(srad::SradOutput),
}

impl KernelInput {
    pub fn benchmark(&self) -> Benchmark {
        match self {
            Self::Bfs(_) => Benchmark::Bfs,
            Self::Crc32(_) => Benchmark::Crc32,
            Self::CsrSpmv(_) => Benchmark::CsrSpmv,
            Self::Fft(_) => Benchmark::Fft,
            Self::Kmeans(_) => Benchmark::Kmeans,
            Self::Lud(_) => Benchmark::Lud,
            Self::Nw(_) => Benchmark::Nw,
            Self::Srad(_) => Benchmark::Srad,
        }
    }
}

fn usize_param(b: Benchmark, params: &Params, name: &'static str) -> Result<usize, DwarfError> {
    let v = params.get(name).ok_or(SizingError::MissingParam { benchmark: b.name(), param: name })?;
    usize::try_from(v).map_err(|_| DwarfError::InvalidParameter("parameter does not fit in usize"))
}

/// Builds the input for `(benchmark, params, seed)`. Identical arguments
/// always give identical inputs.
pub fn generate(b: Benchmark, params: &Params, seed: u64) -> Result<KernelInput, DwarfError> {
    sizing::working_set_of(b, params)?;
    let rng = &mut SplitMix64::for_benchmark(b, seed);
    let p = |name| usize_param(b, params, name);
    Ok(match b {
        Benchmark::Bfs => KernelInput::Bfs(bfs::generate(p("nodes")?, p("edges")?, rng)?),
        Benchmark::Crc32 => KernelInput::Crc32(crc32::generate(p("n")?, rng)),
        Benchmark::CsrSpmv => KernelInput::CsrSpmv(csr_spmv::generate(
            p("rows")?,
            p("nnz")?,
            csr_spmv::DEFAULT_ITERATIONS,
            rng,
        )?),
        Benchmark::Fft => KernelInput::Fft(fft::generate(p("n")?, rng)),
        Benchmark::Kmeans => KernelInput::Kmeans(kmeans::generate(p("points")?, rng)),
        Benchmark::Lud => KernelInput::Lud(lud::generate(p("n")?, rng)),
        Benchmark::Nw => KernelInput::Nw(nw::generate(p("m")?, rng)),
        Benchmark::Srad => KernelInput::Srad(srad::generate(p("rows")?, p("cols")?, rng)),
    })
}

/// Runs one repetition of the kernel for `input`.
pub fn run<R: RegionRecorder>(input: &KernelInput, rec: &mut R) -> Result<KernelOutput, DwarfError> {
    Ok(match input {
        KernelInput::Bfs(i) => KernelOutput::Bfs(bfs::run(i, rec)?),
        KernelInput::Crc32(i) => KernelOutput::Crc32(crc32::run(i, rec)?),
        KernelInput::CsrSpmv(i) => KernelOutput::CsrSpmv(csr_spmv::run(i, rec)?),
        KernelInput::Fft(i) => KernelOutput::Fft(fft::run(i, rec)?),
        KernelInput::Kmeans(i) => KernelOutput::Kmeans(kmeans::run(i, rec)?),
        KernelInput::Lud(i) => KernelOutput::Lud(lud::run(i, rec)?),
        KernelInput::Nw(i) => KernelOutput::Nw(nw::run(i, rec)?),
        KernelInput::Srad(i) => KernelOutput::Srad(srad::run(i, rec)?),
    })
}

/// Checks `output` against the kernel's reference computation.
pub fn verify(input: &KernelInput, output: &KernelOutput) -> Verdict {
    match (input, output) {
        (KernelInput::Bfs(i), KernelOutput::Bfs(o)) => bfs::verify(i, o),
        (KernelInput::Crc32(i), KernelOutput::Crc32(o)) => crc32::verify(i, o),
        (KernelInput::CsrSpmv(i), KernelOutput::CsrSpmv(o)) => csr_spmv::verify(i, o),
        (KernelInput::Fft(i), KernelOutput::Fft(o)) => fft::verify(i, o),
        (KernelInput::Kmeans(i), KernelOutput::Kmeans(o)) => kmeans::verify(i, o),
        (KernelInput::Lud(i), KernelOutput::Lud(o)) => lud::verify(i, o),
        (KernelInput::Nw(i), KernelOutput::Nw(o)) => nw::verify(i, o),
        (KernelInput::Srad(i), KernelOutput::Srad(o)) => srad::verify(i, o),
        _ => Verdict::fail("output belongs to a different kernel"),
    }
}

fn f32_bytes(h: &mut Sha256, xs: &[f32]) {
    for x in xs {
        h.update(x.to_bits().to_le_bytes());
    }
}

fn u32_bytes(h: &mut Sha256, xs: &[u32]) {
    for x in xs {
        h.update(x.to_le_bytes());
    }
}

impl KernelOutput {
    /// SHA-256 over the output's bit patterns, hex encoded. Equal digests
    /// mean bit-identical results.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        match self {
            Self::Bfs(o) => u32_bytes(&mut h, &o.distances),
            Self::Crc32(o) => h.update(o.crc.to_le_bytes()),
            Self::CsrSpmv(o) => f32_bytes(&mut h, &o.y),
            Self::Fft(o) => {
                for c in &o.spectrum {
                    f32_bytes(&mut h, &[c.re, c.im]);
                }
            }
            Self::Kmeans(o) => {
                f32_bytes(&mut h, &o.centroids);
                u32_bytes(&mut h, &o.assignments);
                h.update(o.iterations.to_le_bytes());
            }
            Self::Lud(o) => f32_bytes(&mut h, &o.factors),
            Self::Nw(o) => {
                for x in &o.matrix {
                    h.update(x.to_le_bytes());
                }
            }
            Self::Srad(o) => f32_bytes(&mut h, &o.image),
        }
        crate::kv::hex(&h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::RegionTrace;
    use crate::model::DeviceProfile;
    use crate::sizing::class_entry;
    use crate::model::SizeClass;

    #[test]
    fn every_kernel_runs_and_verifies_at_tiny_size() {
        let device = DeviceProfile::default();
        for b in Benchmark::ALL {
            let entry = class_entry(b, &device, SizeClass::Tiny).unwrap();
            let input = generate(b, &entry.params, 42).unwrap();
            let mut trace = RegionTrace::default();
            let out = run(&input, &mut trace).unwrap();
            assert_eq!(trace.0, b.spec().regions, "{b}");
            let v = verify(&input, &out);
            assert!(v.passed, "{b}: {v:?}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for b in Benchmark::ALL {
            let params = sizing::solve_for(b, 4096).unwrap();
            assert_eq!(generate(b, &params, 7).unwrap(), generate(b, &params, 7).unwrap());
            assert_ne!(generate(b, &params, 7).unwrap(), generate(b, &params, 8).unwrap(), "{b}");
        }
    }

    #[test]
    fn generate_checks_schema() {
        let bad = Params::new().with("n", 1000);
        assert!(matches!(generate(Benchmark::Fft, &bad, 1), Err(DwarfError::Sizing(_))));
    }

    #[test]
    fn mismatched_output_fails() {
        let input = generate(Benchmark::Crc32, &Params::new().with("n", 8), 1).unwrap();
        let other = KernelOutput::Srad(srad::SradOutput { image: alloc::vec![] });
        assert!(!verify(&input, &other).passed);
    }
}
