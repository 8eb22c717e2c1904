//! Dense linear algebra: in-place Doolittle LU factorisation without
//! pivoting.

use alloc::vec;
use alloc::vec::Vec;

use super::{DwarfError, Verdict};
use crate::measure::RegionRecorder;
use crate::model::Region;
use crate::rng::SplitMix64;

/// Pivots smaller than this in magnitude abort the factorisation.
pub const PIVOT_EPS: f32 = 1e-12;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct LudInput {
    pub n: usize,
    /// Row-major `n x n`.
    pub matrix: Vec<f32>,
}

/// Packed factors: strictly-lower part holds L (unit diagonal implied),
/// upper triangle holds U.
#[derive(Clone, Debug, PartialEq)]
pub struct LudOutput {
    pub n: usize,
    pub factors: Vec<f32>,
}

impl LudOutput {
    pub fn lower(&self, i: usize, j: usize) -> f32 {
        match i.cmp(&j) {
            core::cmp::Ordering::Greater => self.factors[i * self.n + j],
            core::cmp::Ordering::Equal => 1.0,
            core::cmp::Ordering::Less => 0.0,
        }
    }

    pub fn upper(&self, i: usize, j: usize) -> f32 {
        if i <= j {
            self.factors[i * self.n + j]
        } else {
            0.0
        }
    }
}

/// Uniform entries in [0, 1) with `n` added to the diagonal, so every
/// leading minor is safely non-singular.
pub fn generate(n: usize, rng: &mut SplitMix64) -> LudInput {
    let mut matrix: Vec<f32> = (0..n * n).map(|_| rng.next_f32()).collect();
    for i in 0..n {
        matrix[i * n + i] += n as f32;
    }
    LudInput { n, matrix }
}

/// Factorises the row-major `n x n` matrix `a` in place.
pub fn decompose_in_place(a: &mut [f32], n: usize) -> Result<(), DwarfError> {
    assert_eq!(a.len(), n * n);
    for k in 0..n {
        let pivot = a[k * n + k];
        if !(pivot.abs() >= PIVOT_EPS) {
            return Err(DwarfError::SingularPivot { index: k });
        }
        let (top, rest) = a.split_at_mut((k + 1) * n);
        let pivot_row = &top[k * n + k + 1..k * n + n];
        for row in rest.chunks_exact_mut(n) {
            let l = row[k] / pivot;
            row[k] = l;
            for (x, &u) in row[k + 1..].iter_mut().zip(pivot_row) {
                *x -= l * u;
            }
        }
    }
    Ok(())
}

pub fn run<R: RegionRecorder>(input: &LudInput, rec: &mut R) -> Result<LudOutput, DwarfError> {
    let n = input.n;
    let mut work = rec.run(Region::Setup, || vec![0f32; n * n]);
    rec.run(Region::TransferIn, || work.copy_from_slice(&input.matrix));
    rec.region(Region::Compute, || decompose_in_place(&mut work, n))?;
    let factors = rec.run(Region::TransferOut, || work.clone());
    rec.run(Region::Teardown, || drop(work));
    Ok(LudOutput { n, factors })
}

/// max |L·U − A| ≤ 1e-4 · max |A|, with the product formed in f64.
pub fn verify(input: &LudInput, output: &LudOutput) -> Verdict {
    let n = input.n;
    if output.n != n || output.factors.len() != n * n {
        return Verdict::fail("lud: output shape mismatch");
    }
    let scale = input.matrix.iter().fold(0f64, |m, &x| m.max((x as f64).abs()));
    let mut row = vec![0f64; n];
    let mut max_err = 0f64;
    for i in 0..n {
        row.iter_mut().for_each(|x| *x = 0.0);
        // (LU)[i][j] = sum_{k <= min(i,j)} L[i][k] U[k][j]
        for k in 0..=i.min(n - 1) {
            let l = if k == i { 1.0 } else { output.factors[i * n + k] as f64 };
            let urow = &output.factors[k * n..(k + 1) * n];
            for j in k..n {
                row[j] += l * urow[j] as f64;
            }
        }
        for j in 0..n {
            max_err = max_err.max((row[j] - input.matrix[i * n + j] as f64).abs());
        }
    }
    let bound = TOLERANCE * scale;
    let rel = if scale > 0.0 { max_err / scale } else { max_err };
    Verdict::check("lud: max|LU - A| / max|A|", rel, TOLERANCE, max_err <= bound)
}
