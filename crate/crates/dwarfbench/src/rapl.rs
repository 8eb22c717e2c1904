//! Linux powercap (RAPL) package energy counter.

use std::fs;
use std::path::{Path, PathBuf};

use dwarfbench_core::energy::{EnergyError, EnergyProvider, EnergyReading};

use crate::chrono::read_monotonic;

pub const DEFAULT_ZONE: &str = "/sys/class/powercap/intel-rapl:0";

/// Reads `energy_uj` of one powercap zone and unwraps counter overflow
/// using `max_energy_range_uj`.
#[derive(Debug)]
pub struct RaplProvider {
    energy_path: PathBuf,
    range_uj: u64,
    last_raw: Option<u64>,
    wraps: u64,
}

fn read_u64(path: &Path) -> Option<u64> {
    fs::read_to_string(path).ok()?.trim().parse().ok()
}

impl RaplProvider {
    /// Opens `zone`; `None` when the counter is missing or unreadable.
    pub fn open(zone: &Path) -> Option<Self> {
        let energy_path = zone.join("energy_uj");
        read_u64(&energy_path)?;
        let range_uj = read_u64(&zone.join("max_energy_range_uj")).unwrap_or(u64::MAX);
        Some(Self { energy_path, range_uj, last_raw: None, wraps: 0 })
    }
}

impl EnergyProvider for RaplProvider {
    fn name(&self) -> &str {
        "rapl"
    }

    fn read(&mut self) -> Result<EnergyReading, EnergyError> {
        let raw = read_u64(&self.energy_path).ok_or(EnergyError::NotAvailable)?;
        if self.last_raw.is_some_and(|last| raw < last) {
            self.wraps += 1;
        }
        self.last_raw = Some(raw);
        let cumulative_uj = self.wraps.saturating_mul(self.range_uj.saturating_add(1)).saturating_add(raw);
        Ok(EnergyReading { timestamp_ns: read_monotonic(), cumulative_uj })
    }

    fn resolution_uj(&self) -> u64 {
        1
    }
}
