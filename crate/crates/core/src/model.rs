//! Partition specifications and random multipartite graph sampling.
//!
//! A [`PartitionSpec`] fixes part sizes and a symmetric cross-part edge
//! probability matrix with a zero diagonal. [`sample`] draws every
//! cross-part pair independently. The Bernoulli decision for a pair is a
//! pure function of the root seed and the pair's canonical index, so the
//! sampled graph does not depend on iteration order or thread count.

use std::fmt;
use std::io::{self, BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::rng::{self, Seed, Substream};

/// Hard cap on vertex count. Keeps d^2 and neighbor-degree sums inside u64
/// for the exact integer groupie predicate.
pub const MAX_VERTICES: usize = 1 << 20;

/// Expected edges / cross pairs at or above this ratio selects the dense
/// sampling path; below it, geometric skipping.
pub const DENSE_THRESHOLD: f64 = 0.1;

const FILE_HEADER: &str = "multipartite-v1";

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("need at least 2 parts, got {0}")]
    TooFewParts(usize),
    #[error("part {0} has size 0; every part must be nonempty")]
    EmptyPart(usize),
    #[error("total vertex count {0} exceeds the supported maximum {MAX_VERTICES}")]
    TooManyVertices(usize),
    #[error("probability {value} at ({row},{col}) outside [0,1]")]
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },
    #[error("edge probability matrix must be {k}x{k}")]
    BadMatrixShape { k: usize },
    #[error("edge probability matrix not symmetric at ({row},{col})")]
    AsymmetricMatrix { row: usize, col: usize },
    #[error("diagonal entry at ({0},{0}) must be exactly 0 (no intra-part edges)")]
    NonZeroDiagonal(usize),
}

/// Part sizes plus the cross-part edge probability matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSpec {
    part_sizes: Vec<usize>,
    /// Row-major k*k, symmetric, zero diagonal.
    edge_prob: Vec<f64>,
    #[serde(skip)]
    part_offsets: Vec<usize>,
}

impl PartitionSpec {
    /// Uniform cross-part probability `p`, zero diagonal.
    pub fn uniform(part_sizes: Vec<usize>, p: f64) -> Result<Self, SpecError> {
        let k = part_sizes.len();
        if !(0.0..=1.0).contains(&p) {
            return Err(SpecError::ProbabilityOutOfRange {
                row: 0,
                col: 1,
                value: p,
            });
        }
        let mut edge_prob = vec![p; k * k];
        for i in 0..k {
            edge_prob[i * k + i] = 0.0;
        }
        Self::from_parts(part_sizes, edge_prob)
    }

    /// Explicit probability matrix, validated for shape, symmetry, range
    /// and zero diagonal.
    pub fn with_matrix(part_sizes: Vec<usize>, matrix: Vec<Vec<f64>>) -> Result<Self, SpecError> {
        let k = part_sizes.len();
        if matrix.len() != k || matrix.iter().any(|row| row.len() != k) {
            return Err(SpecError::BadMatrixShape { k });
        }
        let flat: Vec<f64> = matrix.into_iter().flatten().collect();
        Self::from_parts(part_sizes, flat)
    }

    fn from_parts(part_sizes: Vec<usize>, edge_prob: Vec<f64>) -> Result<Self, SpecError> {
        let k = part_sizes.len();
        if k < 2 {
            return Err(SpecError::TooFewParts(k));
        }
        for (i, &s) in part_sizes.iter().enumerate() {
            if s == 0 {
                return Err(SpecError::EmptyPart(i));
            }
        }
        let n: usize = part_sizes.iter().sum();
        if n > MAX_VERTICES {
            return Err(SpecError::TooManyVertices(n));
        }
        debug_assert_eq!(edge_prob.len(), k * k);
        for i in 0..k {
            if edge_prob[i * k + i] != 0.0 {
                return Err(SpecError::NonZeroDiagonal(i));
            }
            for j in 0..k {
                let v = edge_prob[i * k + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(SpecError::ProbabilityOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                if edge_prob[j * k + i] != v {
                    return Err(SpecError::AsymmetricMatrix { row: i, col: j });
                }
            }
        }
        let part_offsets = offsets_of(&part_sizes);
        Ok(PartitionSpec {
            part_sizes,
            edge_prob,
            part_offsets,
        })
    }

    pub fn k(&self) -> usize {
        self.part_sizes.len()
    }

    pub fn n(&self) -> usize {
        *self.part_offsets.last().unwrap()
    }

    pub fn part_sizes(&self) -> &[usize] {
        &self.part_sizes
    }

    pub fn part_size(&self, i: usize) -> usize {
        self.part_sizes[i]
    }

    /// First vertex id of part `i`; parts occupy contiguous id ranges.
    pub fn part_offset(&self, i: usize) -> usize {
        self.part_offsets[i]
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.edge_prob[i * self.k() + j]
    }

    /// The shared cross-part probability, if all off-diagonal entries agree.
    pub fn uniform_p(&self) -> Option<f64> {
        let p = self.prob(0, 1);
        for i in 0..self.k() {
            for j in 0..self.k() {
                if i != j && self.prob(i, j) != p {
                    return None;
                }
            }
        }
        Some(p)
    }

    /// Number of vertex pairs that may carry an edge.
    pub fn cross_pair_count(&self) -> u64 {
        let mut total = 0u64;
        for i in 0..self.k() {
            for j in (i + 1)..self.k() {
                total += self.part_sizes[i] as u64 * self.part_sizes[j] as u64;
            }
        }
        total
    }

    pub fn expected_edges(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.k() {
            for j in (i + 1)..self.k() {
                total +=
                    self.part_sizes[i] as f64 * self.part_sizes[j] as f64 * self.prob(i, j);
            }
        }
        total
    }
}

fn offsets_of(part_sizes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(part_sizes.len() + 1);
    let mut acc = 0usize;
    offsets.push(0);
    for &s in part_sizes {
        acc += s;
        offsets.push(acc);
    }
    offsets
}

/// Immutable sampled graph: part assignment, sorted adjacency, degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartiteGraph {
    part_sizes: Vec<usize>,
    part_offsets: Vec<usize>,
    part_of: Vec<u32>,
    adj_offsets: Vec<usize>,
    neighbors: Vec<u32>,
    degree: Vec<u32>,
}

impl MultipartiteGraph {
    /// Build from an arbitrary edge list. Neighbor lists are sorted; no
    /// deduplication or structural checks happen here, [`validate`]
    /// reports any invariant breaks as data.
    pub fn from_edges(part_sizes: Vec<usize>, edges: &[(u32, u32)]) -> Self {
        let part_offsets = offsets_of(&part_sizes);
        let n = *part_offsets.last().unwrap();
        let mut degree = vec![0u32; n];
        for &(u, v) in edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut adj_offsets = Vec::with_capacity(n + 1);
        let mut acc = 0usize;
        adj_offsets.push(0);
        for &d in &degree {
            acc += d as usize;
            adj_offsets.push(acc);
        }
        let mut neighbors = vec![0u32; acc];
        let mut cursor: Vec<usize> = adj_offsets[..n].to_vec();
        for &(u, v) in edges {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for v in 0..n {
            neighbors[adj_offsets[v]..adj_offsets[v + 1]].sort_unstable();
        }
        let part_of = part_of_vec(&part_offsets, n);
        MultipartiteGraph {
            part_sizes,
            part_offsets,
            part_of,
            adj_offsets,
            neighbors,
            degree,
        }
    }

    pub fn n(&self) -> usize {
        self.degree.len()
    }

    pub fn k(&self) -> usize {
        self.part_sizes.len()
    }

    pub fn part_sizes(&self) -> &[usize] {
        &self.part_sizes
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.part_of[v] as usize
    }

    pub fn part_offset(&self, i: usize) -> usize {
        self.part_offsets[i]
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.degree[v]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    pub fn edge_count(&self) -> u64 {
        self.neighbors.len() as u64 / 2
    }

    /// Edges as (u, v) with u < v, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (u as u32) < v)
                .map(move |&v| (u as u32, v))
        })
    }

    #[cfg(test)]
    pub(crate) fn degree_mut(&mut self) -> &mut [u32] {
        &mut self.degree
    }

    fn has_neighbor(&self, u: usize, v: u32) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }
}

fn part_of_vec(part_offsets: &[usize], n: usize) -> Vec<u32> {
    let mut part_of = vec![0u32; n];
    for i in 0..part_offsets.len() - 1 {
        for v in part_offsets[i]..part_offsets[i + 1] {
            part_of[v] = i as u32;
        }
    }
    part_of
}

/// One broken invariant, reported as data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    SelfLoop { v: usize },
    IntraPartEdge { u: usize, v: usize },
    AsymmetricAdjacency { u: usize, v: usize },
    DegreeMismatch { v: usize, stored: u32, actual: u32 },
    DuplicateNeighbor { u: usize, v: usize },
    UnsortedNeighbors { v: usize },
    PartSizeMismatch { part: usize, graph: usize, spec: usize },
    PartCountMismatch { graph: usize, spec: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { v } => write!(f, "self-loop at vertex {v}"),
            Violation::IntraPartEdge { u, v } => write!(f, "intra-part edge {{{u},{v}}}"),
            Violation::AsymmetricAdjacency { u, v } => {
                write!(f, "asymmetric adjacency: {u} lists {v} but not vice versa")
            }
            Violation::DegreeMismatch { v, stored, actual } => {
                write!(f, "degree mismatch at vertex {v}: stored {stored}, actual {actual}")
            }
            Violation::DuplicateNeighbor { u, v } => {
                write!(f, "duplicate neighbor {v} in adjacency of {u}")
            }
            Violation::UnsortedNeighbors { v } => write!(f, "unsorted neighbor list at vertex {v}"),
            Violation::PartSizeMismatch { part, graph, spec } => {
                write!(f, "part {part} has {graph} vertices, spec says {spec}")
            }
            Violation::PartCountMismatch { graph, spec } => {
                write!(f, "graph has {graph} parts, spec has {spec}")
            }
        }
    }
}

/// Check all graph invariants against the spec. Empty result means the
/// graph is well formed.
pub fn validate(graph: &MultipartiteGraph, spec: &PartitionSpec) -> Vec<Violation> {
    let mut violations = structural_violations(graph);
    if graph.k() != spec.k() {
        violations.push(Violation::PartCountMismatch {
            graph: graph.k(),
            spec: spec.k(),
        });
    } else {
        for i in 0..spec.k() {
            if graph.part_sizes[i] != spec.part_size(i) {
                violations.push(Violation::PartSizeMismatch {
                    part: i,
                    graph: graph.part_sizes[i],
                    spec: spec.part_size(i),
                });
            }
        }
    }
    violations
}

/// Spec-independent invariants: no self-loops, symmetric sorted adjacency,
/// no intra-part edges, degree vector consistent with adjacency.
pub fn structural_violations(graph: &MultipartiteGraph) -> Vec<Violation> {
    let mut violations = Vec::new();
    for u in 0..graph.n() {
        let ns = graph.neighbors(u);
        let actual = ns.len() as u32;
        if graph.degree(u) != actual {
            violations.push(Violation::DegreeMismatch {
                v: u,
                stored: graph.degree(u),
                actual,
            });
        }
        let mut sorted = true;
        for w in ns.windows(2) {
            if w[0] > w[1] {
                sorted = false;
            } else if w[0] == w[1] {
                violations.push(Violation::DuplicateNeighbor {
                    u,
                    v: w[0] as usize,
                });
            }
        }
        if !sorted {
            violations.push(Violation::UnsortedNeighbors { v: u });
        }
        for &v in ns {
            let v = v as usize;
            if v == u {
                violations.push(Violation::SelfLoop { v });
                continue;
            }
            if graph.part_of(u) == graph.part_of(v) && u < v {
                violations.push(Violation::IntraPartEdge { u, v });
            }
            if !graph.has_neighbor(v, u as u32) {
                violations.push(Violation::AsymmetricAdjacency { u, v });
            }
        }
    }
    violations
}

/// Sample a graph: every cross-part pair {u,v} carries an edge
/// independently with probability `edge_prob[part(u)][part(v)]`.
///
/// Deterministic in (spec, seed). Uses the dense path (one counter-indexed
/// draw per cross pair) when the expected edge density is at least
/// [`DENSE_THRESHOLD`], and per-part-pair geometric skipping otherwise.
pub fn sample(spec: &PartitionSpec, seed: Seed) -> MultipartiteGraph {
    let dense = spec.expected_edges() >= DENSE_THRESHOLD * spec.cross_pair_count() as f64;
    let edges = if dense {
        sample_dense(spec, seed)
    } else {
        sample_sparse(spec, seed)
    };
    MultipartiteGraph::from_edges(spec.part_sizes().to_vec(), &edges)
}

/// Canonical index of the unordered pair {u,v}, u < v, in the
/// strict-upper-triangle row-major enumeration over all n vertices.
#[inline]
fn pair_index(n: u64, u: u64, v: u64) -> u64 {
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

fn sample_dense(spec: &PartitionSpec, seed: Seed) -> Vec<(u32, u32)> {
    let n = spec.n() as u64;
    let stream = rng::stream_seed(seed.root, rng::TAG_PAIR);
    let mut edges = Vec::with_capacity(spec.expected_edges() as usize + 16);
    for i in 0..spec.k() {
        for j in (i + 1)..spec.k() {
            let p = spec.prob(i, j);
            if p == 0.0 {
                continue;
            }
            let (ui0, ui1) = (spec.part_offset(i), spec.part_offset(i + 1));
            let (vj0, vj1) = (spec.part_offset(j), spec.part_offset(j + 1));
            for u in ui0..ui1 {
                let base = pair_index(n, u as u64, vj0 as u64);
                for v in vj0..vj1 {
                    let draw = rng::value_at(stream, base + (v - vj0) as u64);
                    if rng::unit_f64(draw) < p {
                        edges.push((u as u32, v as u32));
                    }
                }
            }
        }
    }
    edges
}

fn sample_sparse(spec: &PartitionSpec, seed: Seed) -> Vec<(u32, u32)> {
    let mut edges = Vec::with_capacity(spec.expected_edges() as usize + 16);
    let mut block = 0u64;
    for i in 0..spec.k() {
        for j in (i + 1)..spec.k() {
            let p = spec.prob(i, j);
            let tag = rng::TAG_SKIP ^ block;
            block += 1;
            if p == 0.0 {
                continue;
            }
            let si = spec.part_size(i) as u64;
            let sj = spec.part_size(j) as u64;
            let total = si * sj;
            let (off_i, off_j) = (spec.part_offset(i) as u64, spec.part_offset(j) as u64);
            if p >= 1.0 {
                for t in 0..total {
                    edges.push(((off_i + t / sj) as u32, (off_j + t % sj) as u32));
                }
                continue;
            }
            let mut stream = Substream::new(seed.root, tag);
            let log_q = (1.0 - p).ln();
            let mut cur = 0u64;
            loop {
                // skip ~ Geometric(p): failures before the next success
                let u = stream.next_unit();
                let skip = ((1.0 - u).ln() / log_q).floor();
                if !skip.is_finite() || skip >= (total - cur) as f64 {
                    break;
                }
                cur += skip as u64;
                edges.push(((off_i + cur / sj) as u32, (off_j + cur % sj) as u32));
                cur += 1;
                if cur >= total {
                    break;
                }
            }
        }
    }
    edges
}

#[derive(Debug, Error)]
pub enum GraphReadError {
    #[error("i/o error reading graph: {0}")]
    Io(#[from] io::Error),
    #[error("line 1: expected header `{FILE_HEADER}`, got `{0}`")]
    BadHeader(String),
    #[error("line 2: malformed parts line: {0}")]
    BadPartsLine(String),
    #[error("line {line}: malformed edge `{text}`: {reason}")]
    BadEdge {
        line: usize,
        text: String,
        reason: String,
    },
    #[error("invalid part structure: {0}")]
    BadSpec(#[from] SpecError),
}

/// Write the `multipartite-v1` text format: header, parts line, then
/// `e u v` lines with u < v in lexicographic order.
pub fn write_graph<W: Write>(graph: &MultipartiteGraph, mut w: W) -> io::Result<()> {
    writeln!(w, "{FILE_HEADER}")?;
    write!(w, "parts {}", graph.k())?;
    for &s in graph.part_sizes() {
        write!(w, " {s}")?;
    }
    writeln!(w)?;
    for (u, v) in graph.edges() {
        writeln!(w, "e {u} {v}")?;
    }
    Ok(())
}

pub fn graph_to_string(graph: &MultipartiteGraph) -> String {
    let mut buf = Vec::new();
    write_graph(graph, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("graph text is ASCII")
}

/// Parse the `multipartite-v1` format. Strict: edges must be in range,
/// cross-part, with u < v, and in strictly increasing lexicographic order.
pub fn read_graph<R: BufRead>(r: R) -> Result<MultipartiteGraph, GraphReadError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| GraphReadError::BadHeader(String::new()))??;
    if header != FILE_HEADER {
        return Err(GraphReadError::BadHeader(header));
    }
    let parts_line = lines
        .next()
        .ok_or_else(|| GraphReadError::BadPartsLine("missing".into()))??;
    let mut tokens = parts_line.split_whitespace();
    if tokens.next() != Some("parts") {
        return Err(GraphReadError::BadPartsLine(parts_line.clone()));
    }
    let k: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| GraphReadError::BadPartsLine(parts_line.clone()))?;
    let part_sizes: Vec<usize> = tokens
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| GraphReadError::BadPartsLine(parts_line.clone()))?;
    if part_sizes.len() != k {
        return Err(GraphReadError::BadPartsLine(parts_line.clone()));
    }
    // Piggyback on spec validation for k >= 2, nonempty parts, size cap.
    PartitionSpec::uniform(part_sizes.clone(), 0.0)?;
    let part_offsets = offsets_of(&part_sizes);
    let n = *part_offsets.last().unwrap() as u32;
    let part_of = part_of_vec(&part_offsets, n as usize);

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut prev: Option<(u32, u32)> = None;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 3;
        let bad = |reason: &str| GraphReadError::BadEdge {
            line: lineno,
            text: line.clone(),
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "e" {
            return Err(bad("expected `e u v`"));
        }
        let u: u32 = fields[1].parse().map_err(|_| bad("bad vertex id"))?;
        let v: u32 = fields[2].parse().map_err(|_| bad("bad vertex id"))?;
        if u >= v {
            return Err(bad("requires u < v"));
        }
        if v >= n {
            return Err(bad("vertex id out of range"));
        }
        if part_of[u as usize] == part_of[v as usize] {
            return Err(bad("edge joins two vertices of the same part"));
        }
        if let Some(p) = prev {
            if (u, v) <= p {
                return Err(bad("edges not in sorted order"));
            }
        }
        prev = Some((u, v));
        edges.push((u, v));
    }
    Ok(MultipartiteGraph::from_edges(part_sizes, &edges))
}

pub fn graph_from_str(text: &str) -> Result<MultipartiteGraph, GraphReadError> {
    read_graph(text.as_bytes())
}
