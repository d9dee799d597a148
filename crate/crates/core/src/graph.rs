//! Undirected simple graphs and the four substrate families.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed selecting a deterministic pseudo-random stream.
///
/// All generators draw from ChaCha8 seeded through [`RngSeed::rng`], so the
/// same seed and parameters give the same graph on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

/// Undirected simple graph on nodes `0..n`.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; neighbor lists are
/// sorted as well. The value is immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge iterator, rejecting self-loops,
    /// out-of-range endpoints and duplicates (in either orientation).
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::param(
                    "edges",
                    format!("edge ({a}, {b}) has an endpoint >= n = {n}"),
                ));
            }
            if a == b {
                return Err(Error::param("edges", format!("self-loop at node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::param("edges", format!("duplicate edge ({a}, {b})")));
            }
            list.push(e);
        }
        Ok(Self::from_unique_edges(n, list))
    }

    /// Internal constructor for edge lists already known to be simple.
    fn from_unique_edges(n: usize, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::from_unique_edges(n, edges)
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0`. Needs `n >= 3`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("n", "a simple cycle needs at least 3 nodes"));
        }
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Star with center 0 and leaves `1..n`.
    pub fn star(n: usize) -> Self {
        Self::from_unique_edges(n, (1..n).map(|v| (0, v)).collect())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Same node set with the given edges removed. Edges not present are ignored.
    pub fn without_edges(&self, removed: &[(usize, usize)]) -> Self {
        let drop: HashSet<(usize, usize)> =
            removed.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|e| !drop.contains(e))
            .collect();
        Self::from_unique_edges(self.n, edges)
    }

    /// Number of connected components (isolated nodes count as components).
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components() <= 1
    }

    /// Hop distance from `source` to every node, `None` when unreachable.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Histogram of node degrees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeDistribution {
    pub n: usize,
    pub histogram: BTreeMap<usize, usize>,
}

impl DegreeDistribution {
    /// Fraction of nodes with degree `k`.
    pub fn fraction(&self, k: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.histogram.get(&k).copied().unwrap_or(0) as f64 / self.n as f64
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let total: usize = self.histogram.iter().map(|(k, c)| k * c).sum();
        total as f64 / self.n as f64
    }
}

pub fn degree_distribution(g: &Graph) -> DegreeDistribution {
    let mut histogram = BTreeMap::new();
    for v in 0..g.node_count() {
        *histogram.entry(g.degree(v)).or_insert(0) += 1;
    }
    DegreeDistribution {
        n: g.node_count(),
        histogram,
    }
}

/// G(n, p): every one of the n(n-1)/2 pairs is an edge independently with
/// probability `p`. Pairs are visited in lexicographic order.
pub fn gen_binomial(n: usize, p: f64, seed: RngSeed) -> Result<Graph> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", format!("{p} is not in [0, 1]")));
    }
    let mut rng = seed.rng();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph::from_unique_edges(n, edges))
}

/// Preferential attachment growth.
///
/// Starts from the complete graph on `m + 1` nodes; every later node attaches
/// `m` edges to distinct existing nodes picked with probability proportional
/// to their current degree.
pub fn gen_powerlaw(n: usize, m: usize, seed: RngSeed) -> Result<Graph> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if n <= m {
        return Err(Error::param("n", format!("n = {n} must exceed m = {m}")));
    }
    let mut rng = seed.rng();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(m * (m + 1) / 2 + (n - m - 1) * m);
    // Every edge contributes both endpoints, so a uniform pick from this list
    // is a degree-proportional pick of a node.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * edges.capacity());
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for new in m + 1..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, new));
            endpoints.push(t);
            endpoints.push(new);
        }
    }
    Ok(Graph::from_unique_edges(n, edges))
}

fn exponential_degrees<R: Rng>(n: usize, lambda: f64, rng: &mut R) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::param("n", "must be at least 2"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("{lambda} must be positive")));
    }
    let dist = Exp::new(lambda).map_err(|e| Error::param("lambda", e.to_string()))?;
    let mut degrees: Vec<usize> = (0..n)
        .map(|_| {
            let k: f64 = dist.sample(rng);
            (k.round() as usize).max(1)
        })
        .collect();
    if degrees.iter().sum::<usize>() % 2 == 1 {
        degrees[n - 1] += 1;
    }
    Ok(degrees)
}

/// Target degree sequence used by [`gen_exponential`] for the same inputs:
/// `max(1, round(X))` with `X ~ Exp(lambda)`, last entry bumped by one when
/// the sum is odd.
pub fn exponential_target_degrees(n: usize, lambda: f64, seed: RngSeed) -> Result<Vec<usize>> {
    exponential_degrees(n, lambda, &mut seed.rng())
}

/// Configuration-model pairing of a degree sequence with an even sum.
/// Self-loops and repeated pairs are discarded, so realized degrees can fall
/// short of the targets.
pub fn configuration_model(degrees: &[usize], seed: RngSeed) -> Result<Graph> {
    configuration_pairing(degrees, &mut seed.rng())
}

fn configuration_pairing<R: Rng>(degrees: &[usize], rng: &mut R) -> Result<Graph> {
    let n = degrees.len();
    let total: usize = degrees.iter().sum();
    if total % 2 == 1 {
        return Err(Error::param("degrees", "degree sum must be even"));
    }
    let mut stubs: Vec<usize> = Vec::with_capacity(total);
    for (v, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(v, d));
    }
    stubs.shuffle(rng);
    let mut seen = HashSet::with_capacity(total / 2);
    let mut edges = Vec::with_capacity(total / 2);
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if seen.insert(e) {
            edges.push(e);
        }
    }
    Ok(Graph::from_unique_edges(n, edges))
}

/// Graph whose target degrees follow the exponential density
/// `lambda * exp(-lambda * k)`, realized with the configuration model.
pub fn gen_exponential(n: usize, lambda: f64, seed: RngSeed) -> Result<Graph> {
    let mut rng = seed.rng();
    let degrees = exponential_degrees(n, lambda, &mut rng)?;
    configuration_pairing(&degrees, &mut rng)
}

/// 4-regular torus: node `i * cols + j` is adjacent to its four grid
/// neighbours with wraparound in both directions.
pub fn gen_lattice4(rows: usize, cols: usize) -> Result<Graph> {
    if rows < 3 || cols < 3 {
        return Err(Error::param(
            "rows/cols",
            format!("torus {rows}x{cols} needs both dimensions >= 3"),
        ));
    }
    let id = |i: usize, j: usize| i * cols + j;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let u = id(i, j);
            for v in [id(i, (j + 1) % cols), id((i + 1) % rows, j)] {
                edges.push((u.min(v), u.max(v)));
            }
        }
    }
    Ok(Graph::from_unique_edges(rows * cols, edges))
}

/// Writes the edge-list format: node count on the first line, then one
/// `u v` line per edge with `u < v`.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "{}", g.node_count())?;
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Parses the edge-list format. `#` starts a comment; blank lines are
/// skipped. Errors carry the 1-based line number.
pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = body.split_whitespace().collect();
        let Some(n) = n else {
            if fields.len() != 1 {
                return Err(parse_err(format!("expected node count, found `{body}`")));
            }
            let count = fields[0]
                .parse::<usize>()
                .map_err(|e| parse_err(format!("bad node count `{}`: {e}", fields[0])))?;
            n = Some(count);
            continue;
        };
        if fields.len() != 2 {
            return Err(parse_err(format!("expected `u v`, found `{body}`")));
        }
        let mut ends = [0usize; 2];
        for (slot, text) in ends.iter_mut().zip(&fields) {
            *slot = text
                .parse()
                .map_err(|e| parse_err(format!("bad node id `{text}`: {e}")))?;
        }
        let [u, v] = ends;
        if u >= n || v >= n {
            return Err(parse_err(format!("edge ({u}, {v}) out of range for n = {n}")));
        }
        if u == v {
            return Err(parse_err(format!("self-loop at node {u}")));
        }
        let e = (u.min(v), u.max(v));
        if !seen.insert(e) {
            return Err(parse_err(format!("duplicate edge ({u}, {v})")));
        }
        edges.push(e);
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        message: "missing node count".into(),
    })?;
    Ok(Graph::from_unique_edges(n, edges))
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    write_edge_list(g, BufWriter::new(File::create(path)?))
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    read_edge_list(BufReader::new(File::open(path)?))
}
