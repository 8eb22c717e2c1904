//! Structured grid: speckle-reducing anisotropic diffusion. Each iteration
//! computes a diffusion coefficient per cell from the local gradient and
//! Laplacian, then applies a divergence update; boundaries are clamped.
//!
//! Storage is two `f32` grids (image and coefficients) plus two row buffers.
//! Per-cell arithmetic runs in `f64`.

use alloc::vec;
use alloc::vec::Vec;

use super::{DwarfError, Verdict};
use crate::measure::RegionRecorder;
use crate::model::Region;
use crate::rng::SplitMix64;

pub const DEFAULT_ITERATIONS: u32 = 4;
pub const DEFAULT_LAMBDA: f32 = 0.5;
/// Allowed relative deviation from the f64 reference, per iteration.
pub const TOLERANCE_PER_ITERATION: f64 = 1e-6;
/// Allowed drift of the mean intensity, per iteration.
pub const MEAN_DRIFT_PER_ITERATION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct SradInput {
    pub rows: usize,
    pub cols: usize,
    /// Row-major intensities, all strictly positive.
    pub image: Vec<f32>,
    pub iterations: u32,
    pub lambda: f32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SradOutput {
    pub image: Vec<f32>,
}

/// Intensities uniform in [0.1, 1.1).
pub fn generate(rows: usize, cols: usize, rng: &mut SplitMix64) -> SradInput {
    let image = (0..rows * cols).map(|_| 0.1 + rng.next_f32()).collect();
    SradInput { rows, cols, image, iterations: DEFAULT_ITERATIONS, lambda: DEFAULT_LAMBDA }
}

fn check(input: &SradInput) -> Result<(), DwarfError> {
    if input.rows == 0 || input.cols == 0 || input.image.len() != input.rows * input.cols {
        return Err(DwarfError::InvalidParameter("srad: image must be rows x cols"));
    }
    if !(input.lambda > 0.0 && input.lambda <= 1.0) {
        return Err(DwarfError::BadLambda);
    }
    if let Some(index) = input.image.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(DwarfError::NonPositiveIntensity { index });
    }
    Ok(())
}

/// Speckle scale `q0^2 = var / mean^2` over the whole image.
fn speckle_scale(image: &[f32]) -> f64 {
    let (mut sum, mut sum2) = (0f64, 0f64);
    for &x in image {
        let x = x as f64;
        sum += x;
        sum2 += x * x;
    }
    let n = image.len() as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    var / (mean * mean)
}

/// Diffusion coefficient from the four one-sided differences of a cell.
/// With no speckle estimate (`q0sqr == 0`) the coefficient is 1.
#[inline]
fn coefficient(jc: f64, d: [f64; 4], q0sqr: f64) -> f64 {
    if q0sqr <= 0.0 {
        return 1.0;
    }
    let g2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]) / (jc * jc);
    let l = (d[0] + d[1] + d[2] + d[3]) / jc;
    let num = 0.5 * g2 - (l * l) / 16.0;
    let den = 1.0 + 0.25 * l;
    let qsqr = num / (den * den);
    let den = (qsqr - q0sqr) / (q0sqr * (1.0 + q0sqr));
    (1.0 / (1.0 + den)).clamp(0.0, 1.0)
}

/// One diffusion step in place. `coef`, `above` and `here` are scratch.
pub fn srad_step(
    image: &mut [f32],
    coef: &mut [f32],
    above: &mut Vec<f32>,
    here: &mut Vec<f32>,
    rows: usize,
    cols: usize,
    lambda: f32,
) {
    let q0sqr = speckle_scale(image);
    let at = |img: &[f32], i: usize, k: usize| img[i * cols + k] as f64;
    for i in 0..rows {
        let (up, down) = (i.saturating_sub(1), (i + 1).min(rows - 1));
        for k in 0..cols {
            let (left, right) = (k.saturating_sub(1), (k + 1).min(cols - 1));
            let jc = at(image, i, k);
            let d = [
                at(image, up, k) - jc,
                at(image, down, k) - jc,
                at(image, i, left) - jc,
                at(image, i, right) - jc,
            ];
            coef[i * cols + k] = coefficient(jc, d, q0sqr) as f32;
        }
    }
    let step = 0.25 * lambda as f64;
    above.resize(cols, 0.0);
    here.resize(cols, 0.0);
    for i in 0..rows {
        here.copy_from_slice(&image[i * cols..(i + 1) * cols]);
        let down = (i + 1).min(rows - 1);
        for k in 0..cols {
            let right = (k + 1).min(cols - 1);
            let jc = here[k] as f64;
            let north = if i == 0 { jc } else { above[k] as f64 };
            let south = if i + 1 == rows { jc } else { image[(i + 1) * cols + k] as f64 };
            let west = here[k.saturating_sub(1)] as f64;
            let east = here[right] as f64;
            let c_here = coef[i * cols + k] as f64;
            let c_south = coef[down * cols + k] as f64;
            let c_east = coef[i * cols + right] as f64;
            let div = c_here * (north - jc) + c_south * (south - jc) + c_here * (west - jc) + c_east * (east - jc);
            image[i * cols + k] = (jc + step * div) as f32;
        }
        core::mem::swap(above, here);
    }
}

pub fn run<R: RegionRecorder>(input: &SradInput, rec: &mut R) -> Result<SradOutput, DwarfError> {
    let (rows, cols) = (input.rows, input.cols);
    let (mut image, mut coef) = rec.region(Region::Setup, || {
        check(input)?;
        Ok::<_, DwarfError>((vec![0f32; rows * cols], vec![0f32; rows * cols]))
    })?;
    rec.run(Region::TransferIn, || image.copy_from_slice(&input.image));
    rec.run(Region::Compute, || {
        let (mut above, mut here) = (Vec::with_capacity(cols), Vec::with_capacity(cols));
        for _ in 0..input.iterations {
            srad_step(&mut image, &mut coef, &mut above, &mut here, rows, cols, input.lambda);
        }
    });
    let out = rec.run(Region::TransferOut, || image.clone());
    rec.run(Region::Teardown, || drop((image, coef)));
    Ok(SradOutput { image: out })
}

/// Straightforward f64 re-implementation with explicit derivative grids.
pub fn reference(input: &SradInput) -> Vec<f64> {
    let (rows, cols) = (input.rows, input.cols);
    let n = rows * cols;
    let mut img: Vec<f64> = input.image.iter().map(|&x| x as f64).collect();
    let (mut dn, mut ds, mut dw, mut de, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let lambda = input.lambda as f64;
    for _ in 0..input.iterations {
        let mean = img.iter().sum::<f64>() / n as f64;
        let var = (img.iter().map(|x| x * x).sum::<f64>() / n as f64 - mean * mean).max(0.0);
        let q0sqr = var / (mean * mean);
        for i in 0..rows {
            for k in 0..cols {
                let idx = i * cols + k;
                let jc = img[idx];
                dn[idx] = if i > 0 { img[idx - cols] - jc } else { 0.0 };
                ds[idx] = if i + 1 < rows { img[idx + cols] - jc } else { 0.0 };
                dw[idx] = if k > 0 { img[idx - 1] - jc } else { 0.0 };
                de[idx] = if k + 1 < cols { img[idx + 1] - jc } else { 0.0 };
                c[idx] = if q0sqr > 0.0 {
                    let g2 = (dn[idx] * dn[idx] + ds[idx] * ds[idx] + dw[idx] * dw[idx] + de[idx] * de[idx]) / (jc * jc);
                    let l = (dn[idx] + ds[idx] + dw[idx] + de[idx]) / jc;
                    let q = (0.5 * g2 - l * l / 16.0) / ((1.0 + 0.25 * l) * (1.0 + 0.25 * l));
                    let r = (q - q0sqr) / (q0sqr * (1.0 + q0sqr));
                    (1.0 / (1.0 + r)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
            }
        }
        for i in 0..rows {
            for k in 0..cols {
                let idx = i * cols + k;
                let cs = if i + 1 < rows { c[idx + cols] } else { c[idx] };
                let ce = if k + 1 < cols { c[idx + 1] } else { c[idx] };
                let div = c[idx] * dn[idx] + cs * ds[idx] + c[idx] * dw[idx] + ce * de[idx];
                img[idx] += 0.25 * lambda * div;
            }
        }
    }
    img
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    s / n as f64
}

/// Matches the f64 reference and preserves mean intensity.
pub fn verify(input: &SradInput, output: &SradOutput) -> Verdict {
    if check(input).is_err() || output.image.len() != input.image.len() {
        return Verdict::fail("srad: malformed input or output");
    }
    let reference = reference(input);
    let rel = output
        .image
        .iter()
        .zip(&reference)
        .fold(0f64, |m, (&o, &r)| m.max((o as f64 - r).abs() / r.abs()));
    let iters = input.iterations.max(1) as f64;
    let tol = TOLERANCE_PER_ITERATION * iters;
    let m0 = mean(input.image.iter().map(|&x| x as f64));
    let m1 = mean(output.image.iter().map(|&x| x as f64));
    let drift_ok = (m1 - m0).abs() <= MEAN_DRIFT_PER_ITERATION * iters * m0;
    Verdict::check("srad: max rel. error vs f64 reference", rel, tol, rel <= tol && drift_ok)
}
