//! Host side of the dwarf benchmark suite: the monotonic clock and its
//! calibration, file formats, the run harness and the `dwarfbench` CLI.
//! Kernels, sizing, statistics and the log format come from
//! [`dwarfbench_core`], re-exported here as [`core`].

pub use dwarfbench_core as core;

pub mod chrono;
pub mod harness;
pub mod io;
#[cfg(feature = "rapl")]
pub mod rapl;

use std::sync::{Arc, Mutex, PoisonError};

use dwarfbench_core::Sample;

/// Append-only sample collection shared between producers. Appends are
/// serialized; each batch stays contiguous.
#[derive(Clone, Debug, Default)]
pub struct SampleSink(Arc<Mutex<Vec<Sample>>>);

impl SampleSink {
    pub fn push(&self, sample: Sample) {
        self.0.lock().unwrap_or_else(PoisonError::into_inner).push(sample);
    }

    pub fn extend(&self, samples: impl IntoIterator<Item = Sample>) {
        let batch: Vec<Sample> = samples.into_iter().collect();
        self.0.lock().unwrap_or_else(PoisonError::into_inner).extend(batch);
    }

    pub fn len(&self) -> usize {
        self.0.lock().unwrap_or_else(PoisonError::into_inner).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Samples appended so far, in append order.
    pub fn snapshot(&self) -> Vec<Sample> {
        self.0.lock().unwrap_or_else(PoisonError::into_inner).clone()
    }

    pub fn into_samples(self) -> Vec<Sample> {
        match Arc::try_unwrap(self.0) {
            Ok(m) => m.into_inner().unwrap_or_else(PoisonError::into_inner),
            Err(shared) => shared.lock().unwrap_or_else(PoisonError::into_inner).clone(),
        }
    }
}
