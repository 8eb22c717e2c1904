//! Spectral methods: iterative radix-2 Cooley-Tukey FFT.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use super::{DwarfError, Verdict};
use crate::measure::RegionRecorder;
use crate::model::Region;
use crate::rng::SplitMix64;

pub const ROUND_TRIP_TOLERANCE: f64 = 1e-4;
pub const PARSEVAL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Complex32 {
    pub re: f32,
    pub im: f32,
}

impl Complex32 {
    pub const fn new(re: f32, im: f32) -> Self {
        Self { re, im }
    }

    pub fn norm_sqr(self) -> f64 {
        let (re, im) = (self.re as f64, self.im as f64);
        re * re + im * im
    }
}

impl Add for Complex32 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex32 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex32 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FftInput {
    pub signal: Vec<Complex32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FftOutput {
    pub spectrum: Vec<Complex32>,
}

pub fn generate(n: usize, rng: &mut SplitMix64) -> FftInput {
    FftInput { signal: (0..n).map(|_| Complex32::new(rng.next_f32(), rng.next_f32())).collect() }
}

fn check_len(n: usize) -> Result<(), DwarfError> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(DwarfError::NotPowerOfTwo(n))
    }
}

/// `exp(-2πik/n)` for `k < n/2` (conjugated for the inverse), evaluated in f64.
pub fn twiddles(n: usize, inverse: bool) -> Vec<Complex32> {
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n / 2)
        .map(|k| {
            let angle = sign * 2.0 * PI * k as f64 / n as f64;
            Complex32::new(libm::cos(angle) as f32, libm::sin(angle) as f32)
        })
        .collect()
}

pub fn bit_reverse_permute<T>(data: &mut [T]) {
    let n = data.len();
    let bits = n.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            data.swap(i, j);
        }
    }
}

/// Butterfly passes over bit-reversed data.
pub fn butterflies(data: &mut [Complex32], twiddles: &[Complex32]) {
    let n = data.len();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for block in data.chunks_exact_mut(len) {
            let (lo, hi) = block.split_at_mut(half);
            for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let v = *b * twiddles[j * stride];
                let u = *a;
                *a = u + v;
                *b = u - v;
            }
        }
        len *= 2;
    }
}

/// Unnormalised in-place DFT (or inverse DFT) of a power-of-two signal.
pub fn fft_in_place(data: &mut [Complex32], inverse: bool) -> Result<(), DwarfError> {
    check_len(data.len())?;
    let tw = twiddles(data.len(), inverse);
    bit_reverse_permute(data);
    butterflies(data, &tw);
    Ok(())
}

pub fn run<R: RegionRecorder>(input: &FftInput, rec: &mut R) -> Result<FftOutput, DwarfError> {
    let n = input.signal.len();
    let (mut work, tw) = rec.region(Region::Setup, || {
        check_len(n)?;
        Ok::<_, DwarfError>((vec![Complex32::default(); n], twiddles(n, false)))
    })?;
    rec.run(Region::TransferIn, || {
        work.copy_from_slice(&input.signal);
        bit_reverse_permute(&mut work);
    });
    rec.run(Region::Compute, || butterflies(&mut work, &tw));
    let spectrum = rec.run(Region::TransferOut, || work.clone());
    rec.run(Region::Teardown, || drop((work, tw)));
    Ok(FftOutput { spectrum })
}

// Recursive decimation-in-time inverse DFT in f64 (unnormalised).
fn inverse_f64(x: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = x.len();
    if n == 1 {
        return x.to_vec();
    }
    let even: Vec<_> = x.iter().step_by(2).copied().collect();
    let odd: Vec<_> = x.iter().skip(1).step_by(2).copied().collect();
    let (e, o) = (inverse_f64(&even), inverse_f64(&odd));
    let mut out = vec![(0.0, 0.0); n];
    for k in 0..n / 2 {
        let angle = 2.0 * PI * k as f64 / n as f64;
        let (c, s) = (libm::cos(angle), libm::sin(angle));
        let t = (o[k].0 * c - o[k].1 * s, o[k].0 * s + o[k].1 * c);
        out[k] = (e[k].0 + t.0, e[k].1 + t.1);
        out[k + n / 2] = (e[k].0 - t.0, e[k].1 - t.1);
    }
    out
}

/// Inverse-transform round trip (f64) within 1e-4 and Parseval energy
/// within 1e-6 relative.
pub fn verify(input: &FftInput, output: &FftOutput) -> Verdict {
    let n = input.signal.len();
    if output.spectrum.len() != n || check_len(n).is_err() {
        return Verdict::fail("fft: length mismatch");
    }
    let spectrum: Vec<(f64, f64)> = output.spectrum.iter().map(|c| (c.re as f64, c.im as f64)).collect();
    let back = inverse_f64(&spectrum);
    let scale = 1.0 / n as f64;
    let round_trip = back.iter().zip(&input.signal).fold(0f64, |m, (b, x)| {
        let dr = b.0 * scale - x.re as f64;
        let di = b.1 * scale - x.im as f64;
        m.max(libm::sqrt(dr * dr + di * di))
    });
    let e_time: f64 = input.signal.iter().map(|c| c.norm_sqr()).sum();
    let e_freq: f64 = output.spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>() * scale;
    let parseval = if e_time > 0.0 { (e_freq - e_time).abs() / e_time } else { e_freq };
    let passed = round_trip <= ROUND_TRIP_TOLERANCE && parseval <= PARSEVAL_TOLERANCE;
    Verdict::check("fft: inverse round-trip error", round_trip, ROUND_TRIP_TOLERANCE, passed)
}
