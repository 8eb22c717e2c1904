//! Portable computational-dwarf kernels and the measurement machinery around
//! them: device profiles and cache-relative size classes, seeded input
//! generation with independent verification, region instrumentation over an
//! abstract clock, pluggable energy counters, summary statistics and the
//! plain-text run log.
//!
//! The crate is `no_std` and only needs `alloc`. Anything that touches a real
//! clock, the filesystem or the command line lives in the `dwarfbench` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dwarfs;
pub mod energy;
pub mod kv;
pub mod log;
pub mod measure;
pub mod model;
pub mod registry;
pub mod report;
pub mod rng;
pub mod sizing;
pub mod stats;

pub use model::{
    Benchmark, BenchmarkSpec, DeviceProfile, DwarfClass, ParamSpec, Params, ProfileError, Region,
    Sample, SampleFlags, SizeClass,
};
pub use registry::{lookup, registry, UnknownBenchmark};

/// Version string written into run logs.
pub const SUITE_VERSION: &str = env!("CARGO_PKG_VERSION");
