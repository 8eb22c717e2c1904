//! Sparse linear algebra: repeated CSR matrix-vector product.

use alloc::vec;
use alloc::vec::Vec;

use super::{max_rel_error, DwarfError, Verdict};
use crate::measure::RegionRecorder;
use crate::model::Region;
use crate::rng::SplitMix64;

pub const TOLERANCE: f64 = 1e-5;
/// Products per repetition.
pub const DEFAULT_ITERATIONS: u32 = 4;
/// Largest matrix (in entries) checked against a fully materialised dense copy.
pub const DENSE_ORACLE_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_offsets: Vec<u32>,
    pub col_indices: Vec<u32>,
    pub values: Vec<f32>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n as u32).collect(),
            col_indices: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a CSR matrix from a row-major dense matrix, skipping zeros.
    pub fn from_dense(rows: usize, cols: usize, dense: &[f32]) -> Self {
        let mut m = Self { rows, cols, row_offsets: vec![0], col_indices: Vec::new(), values: Vec::new() };
        for r in 0..rows {
            for c in 0..cols {
                let v = dense[r * cols + c];
                if v != 0.0 {
                    m.col_indices.push(c as u32);
                    m.values.push(v);
                }
            }
            m.row_offsets.push(m.values.len() as u32);
        }
        m
    }

    pub fn validate(&self) -> Result<(), DwarfError> {
        let bad = |what| Err(DwarfError::MalformedCsr(what));
        if self.row_offsets.len() != self.rows + 1 {
            return bad("row_offsets must have rows + 1 entries");
        }
        if self.row_offsets[0] != 0 {
            return bad("row_offsets must start at 0");
        }
        if self.row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("row_offsets must be non-decreasing");
        }
        if self.row_offsets[self.rows] as usize != self.values.len() || self.col_indices.len() != self.values.len() {
            return bad("row_offsets, col_indices and values disagree on nnz");
        }
        if self.col_indices.iter().any(|&c| c as usize >= self.cols) {
            return bad("column index out of range");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpmvInput {
    pub matrix: CsrMatrix,
    pub x: Vec<f32>,
    pub iterations: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpmvOutput {
    pub y: Vec<f32>,
}

// Robert Floyd's sampling of `count` distinct values from 0..n, sorted.
fn distinct_columns(count: usize, n: usize, rng: &mut SplitMix64, out: &mut Vec<u32>) {
    out.clear();
    for j in n - count..n {
        let t = rng.below(j as u64 + 1) as u32;
        if out.contains(&t) {
            out.push(j as u32);
        } else {
            out.push(t);
        }
    }
    out.sort_unstable();
}

/// Square `rows x rows` matrix with `nnz` nonzeros spread evenly over rows,
/// distinct sorted columns per row, values uniform in [-1, 1).
pub fn generate(rows: usize, nnz: usize, iterations: u32, rng: &mut SplitMix64) -> Result<SpmvInput, DwarfError> {
    if rows == 0 || rows > u32::MAX as usize || nnz > rows.saturating_mul(rows) || nnz > u32::MAX as usize {
        return Err(DwarfError::InvalidParameter("csr_spmv: nnz must fit in rows^2 and u32"));
    }
    let (base, extra) = (nnz / rows, nnz % rows);
    let mut m = CsrMatrix {
        rows,
        cols: rows,
        row_offsets: Vec::with_capacity(rows + 1),
        col_indices: Vec::with_capacity(nnz),
        values: Vec::with_capacity(nnz),
    };
    m.row_offsets.push(0);
    let mut cols = Vec::new();
    for r in 0..rows {
        let count = base + usize::from(r < extra);
        distinct_columns(count, rows, rng, &mut cols);
        for &c in &cols {
            m.col_indices.push(c);
            m.values.push(2.0 * rng.next_f32() - 1.0);
        }
        m.row_offsets.push(m.values.len() as u32);
    }
    let x = (0..rows).map(|_| rng.next_f32()).collect();
    Ok(SpmvInput { matrix: m, x, iterations })
}

/// `y = A x`, accumulating each row in f64.
pub fn multiply(m: &CsrMatrix, x: &[f32], y: &mut [f32]) {
    for (r, out) in y.iter_mut().enumerate() {
        let (start, end) = (m.row_offsets[r] as usize, m.row_offsets[r + 1] as usize);
        let acc: f64 = m.col_indices[start..end]
            .iter()
            .zip(&m.values[start..end])
            .fold(0.0, |acc, (&c, &v)| acc + v as f64 * x[c as usize] as f64);
        *out = acc as f32;
    }
}

pub fn run<R: RegionRecorder>(input: &SpmvInput, rec: &mut R) -> Result<SpmvOutput, DwarfError> {
    let m = &input.matrix;
    let (mut x, mut y) = rec.region(Region::Setup, || {
        m.validate()?;
        if input.x.len() != m.cols {
            return Err(DwarfError::MalformedCsr("vector length differs from column count"));
        }
        Ok((vec![0f32; m.cols], vec![0f32; m.rows]))
    })?;
    rec.run(Region::TransferIn, || x.copy_from_slice(&input.x));
    rec.run(Region::Compute, || {
        for _ in 0..input.iterations.max(1) {
            multiply(m, &x, &mut y);
        }
    });
    let result = rec.run(Region::TransferOut, || y.clone());
    rec.run(Region::Teardown, || drop((x, y)));
    Ok(SpmvOutput { y: result })
}

/// `A x` in f64 through a fully materialised dense copy of `A`.
pub fn dense_product(m: &CsrMatrix, x: &[f32]) -> Vec<f64> {
    let mut dense = vec![0f64; m.rows * m.cols];
    for r in 0..m.rows {
        for k in m.row_offsets[r] as usize..m.row_offsets[r + 1] as usize {
            dense[r * m.cols + m.col_indices[k] as usize] += m.values[k] as f64;
        }
    }
    (0..m.rows)
        .map(|r| dense[r * m.cols..(r + 1) * m.cols].iter().zip(x).map(|(a, &b)| a * b as f64).sum())
        .collect()
}

/// `A x` in f64, scattering (row, col, value) triplets in storage order.
pub fn scatter_product(m: &CsrMatrix, x: &[f32]) -> Vec<f64> {
    let mut y = vec![0f64; m.rows];
    let mut row = 0;
    for k in 0..m.nnz() {
        while m.row_offsets[row + 1] as usize <= k {
            row += 1;
        }
        y[row] += m.values[k] as f64 * x[m.col_indices[k] as usize] as f64;
    }
    y
}

/// Dense reference when the matrix is small enough, scatter otherwise.
pub fn reference_product(m: &CsrMatrix, x: &[f32]) -> Vec<f64> {
    if m.rows.saturating_mul(m.cols) <= DENSE_ORACLE_LIMIT {
        dense_product(m, x)
    } else {
        scatter_product(m, x)
    }
}

pub fn verify(input: &SpmvInput, output: &SpmvOutput) -> Verdict {
    if input.matrix.validate().is_err() || output.y.len() != input.matrix.rows {
        return Verdict::fail("csr_spmv: malformed input or output");
    }
    let reference = reference_product(&input.matrix, &input.x);
    let err = max_rel_error(output.y.iter().map(|&v| v as f64), reference.iter().copied());
    Verdict::check("csr_spmv: max rel. error vs dense product", err, TOLERANCE, err <= TOLERANCE)
}
