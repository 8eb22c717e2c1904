//! Combinational logic: CRC-32 (IEEE 802.3; reflected polynomial
//! 0x04C11DB7, init and final xor 0xFFFFFFFF) using slicing-by-8 tables.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::{DwarfError, Verdict};
use crate::measure::RegionRecorder;
use crate::model::Region;
use crate::rng::SplitMix64;

/// Bit-reversed form of 0x04C11DB7.
pub const POLY_REFLECTED: u32 = 0xEDB8_8320;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crc32Input {
    pub message: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crc32Output {
    pub crc: u32,
}

pub fn generate(n: usize, rng: &mut SplitMix64) -> Crc32Input {
    let mut message = Vec::with_capacity(n + 8);
    while message.len() < n {
        message.extend_from_slice(&rng.next_u64().to_le_bytes());
    }
    message.truncate(n);
    Crc32Input { message }
}

pub type SliceTables = [[u32; 256]; 8];

pub fn slice_tables() -> Box<SliceTables> {
    let mut t = Box::new([[0u32; 256]; 8]);
    for i in 0..256u32 {
        let mut c = i;
        for _ in 0..8 {
            c = if c & 1 != 0 { (c >> 1) ^ POLY_REFLECTED } else { c >> 1 };
        }
        t[0][i as usize] = c;
    }
    for i in 0..256 {
        for s in 1..8 {
            let prev = t[s - 1][i];
            t[s][i] = (prev >> 8) ^ t[0][(prev & 0xff) as usize];
        }
    }
    t
}

pub fn crc32_with(tables: &SliceTables, data: &[u8]) -> u32 {
    let mut crc = !0u32;
    let mut chunks = data.chunks_exact(8);
    for c in &mut chunks {
        let lo = crc ^ u32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        let hi = u32::from_le_bytes([c[4], c[5], c[6], c[7]]);
        crc = tables[7][(lo & 0xff) as usize]
            ^ tables[6][((lo >> 8) & 0xff) as usize]
            ^ tables[5][((lo >> 16) & 0xff) as usize]
            ^ tables[4][(lo >> 24) as usize]
            ^ tables[3][(hi & 0xff) as usize]
            ^ tables[2][((hi >> 8) & 0xff) as usize]
            ^ tables[1][((hi >> 16) & 0xff) as usize]
            ^ tables[0][(hi >> 24) as usize];
    }
    for &b in chunks.remainder() {
        crc = (crc >> 8) ^ tables[0][((crc ^ b as u32) & 0xff) as usize];
    }
    !crc
}

pub fn crc32(data: &[u8]) -> u32 {
    crc32_with(&slice_tables(), data)
}

/// One bit per step, no tables.
pub fn crc32_bitwise(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (POLY_REFLECTED & mask);
        }
    }
    !crc
}

pub fn run<R: RegionRecorder>(input: &Crc32Input, rec: &mut R) -> Result<Crc32Output, DwarfError> {
    let (tables, mut buf) = rec.run(Region::Setup, || (slice_tables(), vec![0u8; input.message.len()]));
    rec.run(Region::TransferIn, || buf.copy_from_slice(&input.message));
    let crc = rec.run(Region::Compute, || crc32_with(&tables, &buf));
    rec.run(Region::Teardown, || drop((tables, buf)));
    Ok(Crc32Output { crc })
}

pub fn verify(input: &Crc32Input, output: &Crc32Output) -> Verdict {
    let expected = crc32_bitwise(&input.message);
    let passed = expected == output.crc;
    Verdict::check("crc32: bitwise reference mismatch", if passed { 0.0 } else { 1.0 }, 0.0, passed)
}
