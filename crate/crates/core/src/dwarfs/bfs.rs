//! Graph traversal: level-synchronous breadth-first search over a CSR
//! adjacency structure.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{DwarfError, Verdict};
use crate::measure::RegionRecorder;
use crate::model::Region;
use crate::rng::SplitMix64;

/// Distance of nodes the source cannot reach.
pub const UNREACHED: u32 = u32::MAX;

/// Directed graph in compressed sparse row form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsrGraph {
    pub offsets: Vec<u32>,
    pub targets: Vec<u32>,
}

impl CsrGraph {
    pub fn nodes(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn neighbours(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    /// Builds a graph from an edge list over `nodes` nodes.
    pub fn from_edges(nodes: usize, edges: &[(u32, u32)]) -> Self {
        let mut degree = vec![0u32; nodes + 1];
        for &(s, _) in edges {
            degree[s as usize + 1] += 1;
        }
        for i in 0..nodes {
            degree[i + 1] += degree[i];
        }
        let mut fill = degree.clone();
        let mut targets = vec![0u32; edges.len()];
        for &(s, t) in edges {
            targets[fill[s as usize] as usize] = t;
            fill[s as usize] += 1;
        }
        Self { offsets: degree, targets }
    }

    pub fn validate(&self) -> Result<(), DwarfError> {
        let bad = |what| Err(DwarfError::MalformedGraph(what));
        if self.offsets.is_empty() || self.offsets[0] != 0 {
            return bad("offsets must start at 0");
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("offsets must be non-decreasing");
        }
        if *self.offsets.last().unwrap() as usize != self.targets.len() {
            return bad("last offset must equal the edge count");
        }
        if self.targets.iter().any(|&t| t as usize >= self.nodes()) {
            return bad("edge target out of range");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BfsInput {
    pub graph: CsrGraph,
    pub source: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BfsOutput {
    pub distances: Vec<u32>,
    pub levels: u32,
}

/// Random directed graph: `edges` spread evenly over nodes, uniform targets
/// (self-loops and repeats allowed), searched from node 0.
pub fn generate(nodes: usize, edges: usize, rng: &mut SplitMix64) -> Result<BfsInput, DwarfError> {
    if nodes == 0 || nodes > u32::MAX as usize || edges > u32::MAX as usize {
        return Err(DwarfError::InvalidParameter("bfs: nodes and edges must fit in u32"));
    }
    let (base, extra) = (edges / nodes, edges % nodes);
    let mut offsets = Vec::with_capacity(nodes + 1);
    let mut targets = Vec::with_capacity(edges);
    offsets.push(0);
    for v in 0..nodes {
        for _ in 0..base + usize::from(v < extra) {
            targets.push(rng.below(nodes as u64) as u32);
        }
        offsets.push(targets.len() as u32);
    }
    Ok(BfsInput { graph: CsrGraph { offsets, targets }, source: 0 })
}

/// Expands one frontier per level; returns the number of levels.
pub fn level_sync_bfs(graph: &CsrGraph, source: usize, distances: &mut [u32]) -> u32 {
    distances.iter_mut().for_each(|d| *d = UNREACHED);
    distances[source] = 0;
    let mut frontier = vec![source as u32];
    let mut next = Vec::new();
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        for &v in &frontier {
            for &u in graph.neighbours(v as usize) {
                let d = &mut distances[u as usize];
                if *d == UNREACHED {
                    *d = level;
                    next.push(u);
                }
            }
        }
        core::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    level - 1
}

fn check(input: &BfsInput) -> Result<(), DwarfError> {
    input.graph.validate()?;
    if input.source as usize >= input.graph.nodes() {
        return Err(DwarfError::SourceOutOfRange { node: input.source as usize, nodes: input.graph.nodes() });
    }
    Ok(())
}

pub fn run<R: RegionRecorder>(input: &BfsInput, rec: &mut R) -> Result<BfsOutput, DwarfError> {
    let n = input.graph.nodes();
    let (mut graph, mut dist) = rec.region(Region::Setup, || {
        check(input)?;
        Ok::<_, DwarfError>((CsrGraph { offsets: vec![0; n + 1], targets: vec![0; input.graph.targets.len()] }, vec![UNREACHED; n]))
    })?;
    rec.run(Region::TransferIn, || {
        graph.offsets.copy_from_slice(&input.graph.offsets);
        graph.targets.copy_from_slice(&input.graph.targets);
    });
    let levels = rec.run(Region::Compute, || level_sync_bfs(&graph, input.source as usize, &mut dist));
    let distances = rec.run(Region::TransferOut, || dist.clone());
    rec.run(Region::Teardown, || drop((graph, dist)));
    Ok(BfsOutput { distances, levels })
}

/// Queue-based textbook BFS.
pub fn reference_distances(graph: &CsrGraph, source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHED; graph.nodes()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &u in graph.neighbours(v) {
            if dist[u as usize] == UNREACHED {
                dist[u as usize] = dist[v] + 1;
                queue.push_back(u as usize);
            }
        }
    }
    dist
}

pub fn verify(input: &BfsInput, output: &BfsOutput) -> Verdict {
    if check(input).is_err() || output.distances.len() != input.graph.nodes() {
        return Verdict::fail("bfs: malformed input or output");
    }
    let reference = reference_distances(&input.graph, input.source as usize);
    let wrong = reference.iter().zip(&output.distances).filter(|(a, b)| a != b).count();
    Verdict::check("bfs: nodes with wrong distance", wrong as f64, 0.0, wrong == 0)
}
