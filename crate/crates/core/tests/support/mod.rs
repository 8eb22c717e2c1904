//! Reference computations written independently of the kernels, shared by
//! the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::HashMap;

use dwarfbench_core::dwarfs::bfs::{BfsOutput, CsrGraph};
use dwarfbench_core::dwarfs::csr_spmv::CsrMatrix;
use dwarfbench_core::dwarfs::fft::Complex32;
use dwarfbench_core::dwarfs::kmeans::{KmeansInput, KmeansOutput};
use dwarfbench_core::dwarfs::lud::{LudInput, LudOutput};
use dwarfbench_core::dwarfs::srad::SradInput;
use dwarfbench_core::dwarfs::{KernelInput, KernelOutput};

pub const LUD_TOL: f64 = 1e-4;
pub const SPMV_TOL: f64 = 1e-5;
pub const DFT_TOL: f64 = 1e-6;
pub const KMEANS_TOL: f64 = 1e-5;
pub const SRAD_TOL_PER_ITER: f64 = 1e-6;

/// max |got - want| / max |want|.
pub fn max_rel(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let diff = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    let scale = want.iter().map(|w| w.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// max |L U - A| / max |A| with the unit-lower and upper triangles read
/// straight out of the packed factors.
pub fn lu_residual(input: &LudInput, out: &LudOutput) -> f64 {
    let n = input.n;
    let f = |i: usize, j: usize| out.factors[i * n + j] as f64;
    let mut worst = 0f64;
    let mut scale = 0f64;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..=i.min(j) {
                let l = if k == i { 1.0 } else { f(i, k) };
                s += l * f(k, j);
            }
            let a = input.matrix[i * n + j] as f64;
            worst = worst.max((s - a).abs());
            scale = scale.max(a.abs());
        }
    }
    worst / scale
}

/// Dense `A x` in f64 from a materialized dense copy of the CSR matrix.
pub fn dense_spmv(m: &CsrMatrix, x: &[f32]) -> Vec<f64> {
    let mut dense = vec![vec![0f64; m.cols]; m.rows];
    for (r, row) in dense.iter_mut().enumerate() {
        for k in m.row_offsets[r]..m.row_offsets[r + 1] {
            row[m.col_indices[k as usize] as usize] += m.values[k as usize] as f64;
        }
    }
    dense.iter().map(|row| row.iter().zip(x).map(|(a, &b)| a * b as f64).sum()).collect()
}

/// O(n^2) discrete Fourier transform, `X_k = sum x_j exp(-2 pi i jk / n)`.
pub fn naive_dft(signal: &[Complex32]) -> Vec<(f64, f64)> {
    let n = signal.len();
    let roots: Vec<(f64, f64)> = (0..n)
        .map(|m| {
            let (s, c) = (-2.0 * std::f64::consts::PI * m as f64 / n as f64).sin_cos();
            (c, s)
        })
        .collect();
    (0..n)
        .map(|k| {
            signal.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, x)| {
                let (c, s) = roots[(j * k) % n];
                (re + x.re as f64 * c - x.im as f64 * s, im + x.re as f64 * s + x.im as f64 * c)
            })
        })
        .collect()
}

/// max |X - DFT| / max |DFT| over complex bins.
pub fn dft_error(signal: &[Complex32], spectrum: &[Complex32]) -> f64 {
    let want = naive_dft(signal);
    let diff = spectrum
        .iter()
        .zip(&want)
        .map(|(g, w)| (g.re as f64 - w.0).hypot(g.im as f64 - w.1))
        .fold(0.0, f64::max);
    diff / want.iter().map(|w| w.0.hypot(w.1)).fold(0.0, f64::max)
}

const NW_MATCH: i32 = 2;
const NW_MISMATCH: i32 = -1;
const NW_GAP: i32 = -1;

fn pair_score(x: u8, y: u8) -> i32 {
    if x == y {
        NW_MATCH
    } else {
        NW_MISMATCH
    }
}

/// Best global alignment score by trying every alignment (exponential).
pub fn nw_brute_force(a: &[u8], b: &[u8]) -> i32 {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len() as i32 * NW_GAP,
        (_, None) => a.len() as i32 * NW_GAP,
        (Some((&x, ra)), Some((&y, rb))) => [
            pair_score(x, y) + nw_brute_force(ra, rb),
            NW_GAP + nw_brute_force(ra, b),
            NW_GAP + nw_brute_force(a, rb),
        ]
        .into_iter()
        .max()
        .unwrap(),
    }
}

/// Score of aligning the prefixes `a[..i]`, `b[..j]` for every `(i, j)`,
/// evaluated top-down with memoization. Row-major `(|a|+1) x (|b|+1)`.
pub fn nw_prefix_scores(a: &[u8], b: &[u8]) -> Vec<i32> {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut HashMap<(usize, usize), i32>) -> i32 {
        if i == 0 || j == 0 {
            return (i + j) as i32 * NW_GAP;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = (go(a, b, i - 1, j - 1, memo) + pair_score(a[i - 1], b[j - 1]))
            .max(go(a, b, i - 1, j, memo) + NW_GAP)
            .max(go(a, b, i, j - 1, memo) + NW_GAP);
        memo.insert((i, j), v);
        v
    }
    let mut memo = HashMap::new();
    let cols = b.len() + 1;
    let mut out = vec![0; (a.len() + 1) * cols];
    // Fill in increasing (i, j) so every recursive call is answered from the
    // memo within a bounded depth.
    for i in 0..=a.len() {
        for j in 0..=b.len() {
            out[i * cols + j] = go(a, b, i, j, &mut memo);
        }
    }
    out
}

/// Distances by repeated edge relaxation until a fixed point.
pub fn bfs_relaxation(graph: &CsrGraph, source: usize) -> Vec<u32> {
    let n = graph.offsets.len() - 1;
    let mut dist = vec![u32::MAX; n];
    dist[source] = 0;
    loop {
        let mut changed = false;
        for v in 0..n {
            if dist[v] == u32::MAX {
                continue;
            }
            for &t in &graph.targets[graph.offsets[v] as usize..graph.offsets[v + 1] as usize] {
                if dist[v] + 1 < dist[t as usize] {
                    dist[t as usize] = dist[v] + 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Bit-serial CRC-32 (IEEE): polynomial 0x04C11DB7 processed MSB-first on
/// bit-reversed input, then reflected, with 0xFFFFFFFF init and final xor.
pub fn crc32_bit_serial(data: &[u8]) -> u32 {
    let mut reg: u32 = 0xFFFF_FFFF;
    for &byte in data {
        let byte = byte.reverse_bits();
        for bit in (0..8).rev() {
            let input = (byte >> bit) & 1;
            let top = (reg >> 31) as u8;
            reg <<= 1;
            if top ^ input == 1 {
                reg ^= 0x04C1_1DB7;
            }
        }
    }
    reg.reverse_bits() ^ 0xFFFF_FFFF
}

/// Speckle-reducing anisotropic diffusion, one cell at a time in f64 with
/// clamped (replicated) borders.
pub fn srad_scalar(input: &SradInput) -> Vec<f64> {
    let (rows, cols) = (input.rows as isize, input.cols as isize);
    let idx = |i: isize, k: isize| (i.clamp(0, rows - 1) * cols + k.clamp(0, cols - 1)) as usize;
    let mut img: Vec<f64> = input.image.iter().map(|&x| x as f64).collect();
    let n = img.len() as f64;
    for _ in 0..input.iterations {
        let mean = img.iter().sum::<f64>() / n;
        let var = img.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let q0 = var / (mean * mean);
        let diffs = |img: &[f64], i: isize, k: isize| {
            let c = img[idx(i, k)];
            [img[idx(i - 1, k)] - c, img[idx(i + 1, k)] - c, img[idx(i, k - 1)] - c, img[idx(i, k + 1)] - c]
        };
        let mut coef = vec![0f64; img.len()];
        for i in 0..rows {
            for k in 0..cols {
                let c = img[idx(i, k)];
                let [dn, ds, dw, de] = diffs(&img, i, k);
                coef[idx(i, k)] = if q0 > 0.0 {
                    let g2 = (dn * dn + ds * ds + dw * dw + de * de) / (c * c);
                    let l = (dn + ds + dw + de) / c;
                    let q = (0.5 * g2 - l * l / 16.0) / ((1.0 + 0.25 * l) * (1.0 + 0.25 * l));
                    (1.0 / (1.0 + (q - q0) / (q0 * (1.0 + q0)))).clamp(0.0, 1.0)
                } else {
                    1.0
                };
            }
        }
        let prev = img.clone();
        for i in 0..rows {
            for k in 0..cols {
                let [dn, ds, dw, de] = diffs(&prev, i, k);
                let c = coef[idx(i, k)];
                let div = c * dn + coef[idx(i + 1, k)] * ds + c * dw + coef[idx(i, k + 1)] * de;
                img[idx(i, k)] = prev[idx(i, k)] + 0.25 * input.lambda as f64 * div;
            }
        }
    }
    img
}

/// Worst violation of the k-means fixed-point conditions: every point sits
/// with a nearest centroid and every populated centroid is its cluster mean.
/// Distances are compared relative to `1 + best`, coordinates relative to
/// `1 + |mean|`.
pub fn kmeans_residual(input: &KmeansInput, out: &KmeansOutput) -> f64 {
    let d = input.dims;
    let dist = |p: &[f32], c: &[f32]| p.iter().zip(c).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>();
    let mut worst = 0f64;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); input.k];
    for (i, p) in input.points.chunks(d).enumerate() {
        let a = out.assignments[i] as usize;
        members[a].push(i);
        let best = out.centroids.chunks(d).map(|c| dist(p, c)).fold(f64::INFINITY, f64::min);
        worst = worst.max((dist(p, &out.centroids[a * d..(a + 1) * d]) - best) / (1.0 + best));
    }
    for (c, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        for j in 0..d {
            let mean = m.iter().map(|&i| input.points[i * d + j] as f64).sum::<f64>() / m.len() as f64;
            worst = worst.max((out.centroids[c * d + j] as f64 - mean).abs() / (1.0 + mean.abs()));
        }
    }
    worst
}

/// Sum of squared distances to cluster means for a given labelling.
pub fn sse(points: &[f32], dims: usize, labels: &[u32], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&[f32]> = points.chunks(dims).zip(labels).filter(|(_, &l)| l as usize == c).map(|(p, _)| p).collect();
        if members.is_empty() {
            continue;
        }
        for j in 0..dims {
            let mean = members.iter().map(|p| p[j] as f64).sum::<f64>() / members.len() as f64;
            total += members.iter().map(|p| (p[j] as f64 - mean).powi(2)).sum::<f64>();
        }
    }
    total
}

/// Smallest SSE over every labelling with `k` non-empty clusters.
pub fn best_partition_sse(points: &[f32], dims: usize, k: usize) -> f64 {
    let n = points.len() / dims;
    let mut labels = vec![0u32; n];
    let mut best = f64::INFINITY;
    loop {
        let used = (0..k as u32).all(|c| labels.contains(&c));
        if used {
            best = best.min(sse(points, dims, &labels, k));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if (labels[i] as usize) < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// The oracle's measured error for one instance and the tolerance it must
/// meet (0 for exact kernels).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleCheck {
    pub error: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

fn exact(equal: bool) -> OracleCheck {
    OracleCheck { error: if equal { 0.0 } else { 1.0 }, tolerance: 0.0 }
}

fn bfs_check(graph: &CsrGraph, source: u32, out: &BfsOutput) -> OracleCheck {
    exact(out.distances == bfs_relaxation(graph, source as usize))
}

/// Compares a kernel output with the matching independent oracle.
pub fn oracle_check(input: &KernelInput, output: &KernelOutput) -> OracleCheck {
    match (input, output) {
        (KernelInput::Bfs(i), KernelOutput::Bfs(o)) => bfs_check(&i.graph, i.source, o),
        (KernelInput::Crc32(i), KernelOutput::Crc32(o)) => exact(o.crc == crc32_bit_serial(&i.message)),
        (KernelInput::CsrSpmv(i), KernelOutput::CsrSpmv(o)) => {
            let got: Vec<f64> = o.y.iter().map(|&v| v as f64).collect();
            OracleCheck { error: max_rel(&got, &dense_spmv(&i.matrix, &i.x)), tolerance: SPMV_TOL }
        }
        (KernelInput::Fft(i), KernelOutput::Fft(o)) => {
            OracleCheck { error: dft_error(&i.signal, &o.spectrum), tolerance: DFT_TOL }
        }
        (KernelInput::Kmeans(i), KernelOutput::Kmeans(o)) => {
            OracleCheck { error: kmeans_residual(i, o), tolerance: KMEANS_TOL }
        }
        (KernelInput::Lud(i), KernelOutput::Lud(o)) => OracleCheck { error: lu_residual(i, o), tolerance: LUD_TOL },
        (KernelInput::Nw(i), KernelOutput::Nw(o)) => {
            let want = nw_prefix_scores(&i.a, &i.b);
            exact(o.matrix == want && o.score == *want.last().unwrap())
        }
        (KernelInput::Srad(i), KernelOutput::Srad(o)) => {
            let got: Vec<f64> = o.image.iter().map(|&v| v as f64).collect();
            let want = srad_scalar(i);
            let err = got.iter().zip(&want).map(|(g, w)| ((g - w) / w).abs()).fold(0.0, f64::max);
            OracleCheck { error: err, tolerance: SRAD_TOL_PER_ITER * i.iterations.max(1) as f64 }
        }
        _ => panic!("input and output belong to different kernels"),
    }
}
