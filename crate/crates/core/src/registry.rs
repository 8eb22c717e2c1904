//! The fixed set of registered benchmarks.

use alloc::string::{String, ToString};

use thiserror::Error;

use crate::model::{Benchmark, BenchmarkSpec, DwarfClass, ParamSpec, Region};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unknown benchmark `{0}`")]
pub struct UnknownBenchmark(pub String);

const ALL_REGIONS: &[Region] =
    &[Region::Setup, Region::TransferIn, Region::Compute, Region::TransferOut, Region::Teardown];

// crc32 produces a single word; there is no result buffer to unpack.
const CRC_REGIONS: &[Region] = &[Region::Setup, Region::TransferIn, Region::Compute, Region::Teardown];

const fn p(name: &'static str, min: u64, max: u64) -> ParamSpec {
    ParamSpec { name, min, max }
}

static REGISTRY: [BenchmarkSpec; 8] = [
    BenchmarkSpec {
        benchmark: Benchmark::Bfs,
        name: "bfs",
        dwarf_class: DwarfClass::GraphTraversal,
        params: &[p("nodes", 1, 1 << 36), p("edges", 0, 1 << 40)],
        growth_param: "nodes",
        regions: ALL_REGIONS,
    },
    BenchmarkSpec {
        benchmark: Benchmark::Crc32,
        name: "crc32",
        dwarf_class: DwarfClass::CombinationalLogic,
        params: &[p("n", 1, 1 << 44)],
        growth_param: "n",
        regions: CRC_REGIONS,
    },
    BenchmarkSpec {
        benchmark: Benchmark::CsrSpmv,
        name: "csr_spmv",
        dwarf_class: DwarfClass::SparseLinearAlgebra,
        params: &[p("rows", 10, 1 << 36), p("nnz", 0, 1 << 40)],
        growth_param: "rows",
        regions: ALL_REGIONS,
    },
    BenchmarkSpec {
        benchmark: Benchmark::Fft,
        name: "fft",
        dwarf_class: DwarfClass::Spectral,
        params: &[p("n", 2, 1 << 40)],
        growth_param: "n",
        regions: ALL_REGIONS,
    },
    BenchmarkSpec {
        benchmark: Benchmark::Kmeans,
        name: "kmeans",
        dwarf_class: DwarfClass::MapReduce,
        params: &[p("points", 8, 1 << 40)],
        growth_param: "points",
        regions: ALL_REGIONS,
    },
    BenchmarkSpec {
        benchmark: Benchmark::Lud,
        name: "lud",
        dwarf_class: DwarfClass::DenseLinearAlgebra,
        params: &[p("n", 1, 1 << 24)],
        growth_param: "n",
        regions: ALL_REGIONS,
    },
    BenchmarkSpec {
        benchmark: Benchmark::Nw,
        name: "nw",
        dwarf_class: DwarfClass::DynamicProgramming,
        params: &[p("m", 1, 1 << 24)],
        growth_param: "m",
        regions: ALL_REGIONS,
    },
    BenchmarkSpec {
        benchmark: Benchmark::Srad,
        name: "srad",
        dwarf_class: DwarfClass::StructuredGrid,
        params: &[p("rows", 2, 1 << 24), p("cols", 2, 1 << 24)],
        growth_param: "rows",
        regions: ALL_REGIONS,
    },
];

/// All registered benchmarks, sorted by name.
pub fn registry() -> &'static [BenchmarkSpec] {
    &REGISTRY
}

pub fn lookup(name: &str) -> Result<&'static BenchmarkSpec, UnknownBenchmark> {
    REGISTRY.iter().find(|s| s.name == name).ok_or_else(|| UnknownBenchmark(name.to_string()))
}

pub(crate) fn spec_of(benchmark: Benchmark) -> &'static BenchmarkSpec {
    // REGISTRY is in the same order as Benchmark::ALL.
    &REGISTRY[benchmark as usize]
}
