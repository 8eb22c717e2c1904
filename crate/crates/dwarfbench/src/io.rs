//! File access for profiles, power traces and run logs.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use dwarfbench_core::energy::{PowerProfile, PowerProfileError};
use dwarfbench_core::log::{self, LogError, RunLog};
use dwarfbench_core::{DeviceProfile, ProfileError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Profile { path: PathBuf, source: ProfileError },
    #[error("{path}: {source}")]
    PowerProfile { path: PathBuf, source: PowerProfileError },
    #[error("{path}: {source}")]
    Log { path: PathBuf, source: LogError },
}

fn read(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Io { path: path.into(), source })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.into(), source })
}

pub fn load_profile(path: &Path) -> Result<DeviceProfile, IoError> {
    DeviceProfile::from_kv_text(&read_text(path)?).map_err(|source| IoError::Profile { path: path.into(), source })
}

pub fn load_power_profile(path: &Path) -> Result<PowerProfile, IoError> {
    PowerProfile::parse(&read_text(path)?).map_err(|source| IoError::PowerProfile { path: path.into(), source })
}

pub fn read_log(path: &Path) -> Result<RunLog, IoError> {
    log::parse_log(&read(path)?).map_err(|source| IoError::Log { path: path.into(), source })
}

/// Streams `log` into `out`.
pub fn write_log_to(log: &RunLog, out: &mut impl Write) -> io::Result<()> {
    out.write_all(log.to_text().as_bytes())?;
    out.flush()
}

/// Writes `log` to `path`, replacing any existing file.
pub fn write_log(log: &RunLog, path: &Path) -> Result<(), IoError> {
    write_file(path, log.to_text().as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::Io { path: path.into(), source })
}
