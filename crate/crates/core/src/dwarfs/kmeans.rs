//! MapReduce: Lloyd's k-means. The map step assigns each point to its
//! nearest centroid, the reduce step averages each cluster.

use alloc::vec;
use alloc::vec::Vec;

use super::{DwarfError, Verdict};
use crate::measure::RegionRecorder;
use crate::model::Region;
use crate::rng::SplitMix64;
use crate::sizing::{KMEANS_DIMS, KMEANS_K};

pub const TOLERANCE: f64 = 1e-5;
pub const DEFAULT_MAX_ITERS: u32 = 100;
/// Half-width of the uniform jitter around each generating centre.
const SPREAD: f32 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansInput {
    /// Row-major `points x dims`.
    pub points: Vec<f32>,
    pub dims: usize,
    pub k: usize,
    pub max_iters: u32,
}

impl KmeansInput {
    pub fn n_points(&self) -> usize {
        self.points.len().checked_div(self.dims).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansOutput {
    /// Row-major `k x dims`.
    pub centroids: Vec<f32>,
    pub assignments: Vec<u32>,
    pub iterations: u32,
    pub converged: bool,
    /// Points whose cluster changed in the final pass.
    pub last_reassignments: usize,
}

/// Points scattered around `k` seeded centres; point `i` belongs to centre
/// `i mod k`, so the first `k` points (the initial centroids) come from
/// distinct clusters.
pub fn generate(points: usize, rng: &mut SplitMix64) -> KmeansInput {
    let (dims, k) = (KMEANS_DIMS as usize, KMEANS_K as usize);
    let centres: Vec<f32> = (0..k * dims).map(|_| rng.next_f32()).collect();
    let mut data = Vec::with_capacity(points * dims);
    for i in 0..points {
        let c = &centres[(i % k) * dims..(i % k + 1) * dims];
        data.extend(c.iter().map(|&x| x + SPREAD * (2.0 * rng.next_f32() - 1.0)));
    }
    KmeansInput { points: data, dims, k, max_iters: DEFAULT_MAX_ITERS }
}

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &[f32], centroids: &[f32], dims: usize) -> u32 {
    let mut best = (0u32, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dims).enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c as u32, d);
        }
    }
    best.0
}

fn check(input: &KmeansInput) -> Result<(), DwarfError> {
    if input.dims == 0 || input.points.len() % input.dims != 0 {
        return Err(DwarfError::InvalidParameter("kmeans: points must be a whole number of rows"));
    }
    if input.k == 0 {
        return Err(DwarfError::InvalidParameter("kmeans: k must be positive"));
    }
    if input.k > input.n_points() {
        return Err(DwarfError::KTooLarge { k: input.k, points: input.n_points() });
    }
    Ok(())
}

/// Runs Lloyd iterations until a pass leaves every centroid unchanged.
pub fn lloyd(points: &[f32], dims: usize, k: usize, max_iters: u32, centroids: &mut [f32], assignments: &mut [u32]) -> (u32, bool, usize) {
    let mut sums = vec![0f64; k * dims];
    let mut counts = vec![0usize; k];
    let mut next = vec![0f32; k * dims];
    let mut reassigned = 0;
    for iter in 1..=max_iters {
        reassigned = 0;
        for (p, slot) in points.chunks_exact(dims).zip(assignments.iter_mut()) {
            let c = nearest(p, centroids, dims);
            if c != *slot {
                reassigned += 1;
                *slot = c;
            }
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (p, &c) in points.chunks_exact(dims).zip(assignments.iter()) {
            let c = c as usize;
            counts[c] += 1;
            for (s, &x) in sums[c * dims..(c + 1) * dims].iter_mut().zip(p) {
                *s += x as f64;
            }
        }
        for c in 0..k {
            let dst = &mut next[c * dims..(c + 1) * dims];
            if counts[c] == 0 {
                dst.copy_from_slice(&centroids[c * dims..(c + 1) * dims]);
            } else {
                for (d, s) in dst.iter_mut().zip(&sums[c * dims..(c + 1) * dims]) {
                    *d = (s / counts[c] as f64) as f32;
                }
            }
        }
        if next == centroids {
            return (iter, true, reassigned);
        }
        centroids.copy_from_slice(&next);
    }
    (max_iters, false, reassigned)
}

pub fn run<R: RegionRecorder>(input: &KmeansInput, rec: &mut R) -> Result<KmeansOutput, DwarfError> {
    let (dims, k) = (input.dims, input.k);
    let (mut points, mut centroids, mut assignments) = rec.region(Region::Setup, || {
        check(input)?;
        Ok::<_, DwarfError>((vec![0f32; input.points.len()], vec![0f32; k * dims], vec![u32::MAX; input.n_points()]))
    })?;
    rec.run(Region::TransferIn, || {
        points.copy_from_slice(&input.points);
        centroids.copy_from_slice(&input.points[..k * dims]);
    });
    let (iterations, converged, last_reassignments) =
        rec.run(Region::Compute, || lloyd(&points, dims, k, input.max_iters, &mut centroids, &mut assignments));
    let out = rec.run(Region::TransferOut, || KmeansOutput {
        centroids: centroids.clone(),
        assignments: assignments.clone(),
        iterations,
        converged,
        last_reassignments,
    });
    rec.run(Region::Teardown, || drop((points, centroids, assignments)));
    Ok(out)
}

/// Checks that every point sits with a nearest centroid and every
/// non-empty centroid is its cluster's mean, both within 1e-5.
pub fn verify(input: &KmeansInput, output: &KmeansOutput) -> Verdict {
    let (dims, k) = (input.dims, input.k);
    if output.centroids.len() != k * dims
        || output.assignments.len() != input.n_points()
        || output.assignments.iter().any(|&a| a as usize >= k)
    {
        return Verdict::fail("kmeans: output shape mismatch");
    }
    let mut worst = 0f64;
    let mut sums = vec![0f64; k * dims];
    let mut counts = vec![0usize; k];
    for (p, &a) in input.points.chunks_exact(dims).zip(&output.assignments) {
        let a = a as usize;
        let dists: Vec<f64> = output.centroids.chunks_exact(dims).map(|c| sq_dist(p, c)).collect();
        let best = dists.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max((dists[a] - best) / (1.0 + best));
        counts[a] += 1;
        for (s, &x) in sums[a * dims..(a + 1) * dims].iter_mut().zip(p) {
            *s += x as f64;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        for d in 0..dims {
            let mean = sums[c * dims + d] / counts[c] as f64;
            let got = output.centroids[c * dims + d] as f64;
            worst = worst.max((got - mean).abs() / (1.0 + mean.abs()));
        }
    }
    Verdict::check("kmeans: nearest-centroid and mean residual", worst, TOLERANCE, worst <= TOLERANCE)
}
