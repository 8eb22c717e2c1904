//! The plain `key=value` text format shared by device profiles and size-plan
//! exports. One pair per line, `#` comment lines and blank lines ignored,
//! whitespace around keys and values trimmed.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KvError {
    #[error("line {line}: expected `key=value`")]
    MissingSeparator { line: usize },
    #[error("line {line}: empty key")]
    EmptyKey { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KvEntry {
    pub key: String,
    pub value: String,
    /// 1-based source line, 0 for entries built in memory.
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KvDocument {
    entries: Vec<KvEntry>,
    comments: Vec<String>,
}

impl KvDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries: Vec<KvEntry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) =
                trimmed.split_once('=').ok_or(KvError::MissingSeparator { line })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(KvError::EmptyKey { line });
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(KvError::DuplicateKey { line, key: key.to_string() });
            }
            entries.push(KvEntry { key: key.to_string(), value: value.trim().to_string(), line });
        }
        Ok(Self { entries, comments: Vec::new() })
    }

    pub fn entries(&self) -> &[KvEntry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    pub fn comment(&mut self, text: &str) {
        self.comments.push(text.to_string());
    }

    pub fn push(&mut self, key: &str, value: &str) {
        self.entries.push(KvEntry { key: key.to_string(), value: value.to_string(), line: 0 });
    }

    /// Comments first, then entries in insertion order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        for e in &self.entries {
            let _ = writeln!(out, "{}={}", e.key, e.value);
        }
        out
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}
