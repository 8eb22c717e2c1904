//! Dynamic programming: Needleman-Wunsch global alignment with a linear gap
//! penalty, filled block-wise along anti-diagonals.

use alloc::vec;
use alloc::vec::Vec;

use super::{DwarfError, Verdict};
use crate::measure::RegionRecorder;
use crate::model::Region;
use crate::rng::SplitMix64;

pub const MATCH: i32 = 2;
pub const MISMATCH: i32 = -1;
pub const GAP: i32 = -1;
pub const ALPHABET: &[u8; 4] = b"ACGT";
const BLOCK: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NwInput {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NwOutput {
    /// Row-major `(a.len() + 1) x (b.len() + 1)` score matrix.
    pub matrix: Vec<i32>,
    pub score: i32,
}

pub fn generate(m: usize, rng: &mut SplitMix64) -> NwInput {
    let mut seq = || (0..m).map(|_| ALPHABET[rng.below(4) as usize]).collect::<Vec<u8>>();
    let a = seq();
    let b = seq();
    NwInput { a, b }
}

#[inline]
pub fn substitution(x: u8, y: u8) -> i32 {
    if x == y {
        MATCH
    } else {
        MISMATCH
    }
}

/// Fills `matrix` (row-major, `(a.len()+1) x (b.len()+1)`).
pub fn fill_blocked(a: &[u8], b: &[u8], matrix: &mut [i32]) {
    let (rows, cols) = (a.len() + 1, b.len() + 1);
    debug_assert_eq!(matrix.len(), rows * cols);
    for i in 0..rows {
        matrix[i * cols] = i as i32 * GAP;
    }
    for j in 0..cols {
        matrix[j] = j as i32 * GAP;
    }
    let (brows, bcols) = (a.len().div_ceil(BLOCK), b.len().div_ceil(BLOCK));
    for diag in 0..brows + bcols {
        let first = diag.saturating_sub(bcols - 1);
        let last = diag.min(brows - 1);
        for bi in first..=last {
            let bj = diag - bi;
            let (i0, j0) = (1 + bi * BLOCK, 1 + bj * BLOCK);
            for i in i0..(i0 + BLOCK).min(rows) {
                let ai = a[i - 1];
                for j in j0..(j0 + BLOCK).min(cols) {
                    let diag_score = matrix[(i - 1) * cols + j - 1] + substitution(ai, b[j - 1]);
                    let up = matrix[(i - 1) * cols + j] + GAP;
                    let left = matrix[i * cols + j - 1] + GAP;
                    matrix[i * cols + j] = diag_score.max(up).max(left);
                }
            }
        }
    }
}

pub fn run<R: RegionRecorder>(input: &NwInput, rec: &mut R) -> Result<NwOutput, DwarfError> {
    let (mut a, mut b, mut matrix) = rec.region(Region::Setup, || {
        if input.a.is_empty() || input.b.is_empty() {
            return Err(DwarfError::EmptySequence);
        }
        let size = (input.a.len() + 1) * (input.b.len() + 1);
        Ok((vec![0u8; input.a.len()], vec![0u8; input.b.len()], vec![0i32; size]))
    })?;
    rec.run(Region::TransferIn, || {
        a.copy_from_slice(&input.a);
        b.copy_from_slice(&input.b);
    });
    rec.run(Region::Compute, || fill_blocked(&a, &b, &mut matrix));
    let out = rec.run(Region::TransferOut, || {
        let score = *matrix.last().expect("matrix is non-empty");
        NwOutput { matrix: matrix.clone(), score }
    });
    rec.run(Region::Teardown, || drop((a, b, matrix)));
    Ok(out)
}

/// Row-at-a-time recurrence; calls `on_row` with every completed row.
pub fn rolling_rows(a: &[u8], b: &[u8], mut on_row: impl FnMut(usize, &[i32])) -> i32 {
    let mut prev: Vec<i32> = (0..=b.len()).map(|j| j as i32 * GAP).collect();
    on_row(0, &prev);
    let mut cur = vec![0i32; b.len() + 1];
    for (i, &ai) in a.iter().enumerate() {
        cur[0] = (i as i32 + 1) * GAP;
        for j in 1..=b.len() {
            cur[j] = (prev[j - 1] + substitution(ai, b[j - 1])).max(prev[j] + GAP).max(cur[j - 1] + GAP);
        }
        on_row(i + 1, &cur);
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Recomputes every row with the rolling recurrence; exact match required.
pub fn verify(input: &NwInput, output: &NwOutput) -> Verdict {
    let cols = input.b.len() + 1;
    if output.matrix.len() != (input.a.len() + 1) * cols {
        return Verdict::fail("nw: matrix shape mismatch");
    }
    let mut mismatches = 0usize;
    let score = rolling_rows(&input.a, &input.b, |i, row| {
        if output.matrix[i * cols..(i + 1) * cols] != *row {
            mismatches += 1;
        }
    });
    let diff = (score - output.score).unsigned_abs() as f64;
    let passed = mismatches == 0 && diff == 0.0;
    Verdict::check("nw: |score - reference score|", diff + mismatches as f64, 0.0, passed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Untimed;

    fn score(a: &[u8], b: &[u8]) -> i32 {
        run(&NwInput { a: a.to_vec(), b: b.to_vec() }, &mut Untimed).unwrap().score
    }

    #[test]
    fn identical_sequences_score_two_per_base() {
        assert_eq!(score(b"GATTACA", b"GATTACA"), 14);
        let long: Vec<u8> = (0..100).map(|i| ALPHABET[i % 4]).collect();
        assert_eq!(score(&long, &long), 200);
    }

    #[test]
    fn empty_sequence_is_rejected() {
        let input = NwInput { a: Vec::new(), b: b"ACGT".to_vec() };
        assert_eq!(run(&input, &mut Untimed), Err(DwarfError::EmptySequence));
    }

    #[test]
    fn blocked_matches_rolling_on_uneven_shapes() {
        let mut rng = SplitMix64::new(11);
        for (la, lb) in [(1, 1), (1, 40), (17, 3), (33, 50), (64, 64)] {
            let a: Vec<u8> = (0..la).map(|_| ALPHABET[rng.below(4) as usize]).collect();
            let b: Vec<u8> = (0..lb).map(|_| ALPHABET[rng.below(4) as usize]).collect();
            let input = NwInput { a, b };
            let out = run(&input, &mut Untimed).unwrap();
            assert!(verify(&input, &out).passed, "{la}x{lb}");
        }
    }

    #[test]
    fn tampered_matrix_fails() {
        let input = generate(20, &mut SplitMix64::new(1));
        let mut out = run(&input, &mut Untimed).unwrap();
        out.matrix[30] += 1;
        assert!(!verify(&input, &out).passed);
    }
}
