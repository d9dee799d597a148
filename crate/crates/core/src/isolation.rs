//! Topology modifications that lower the adjacency spectral radius.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{gen_lattice4, Graph};
use crate::meanfield::{LinkProbs, NodeParams};
use crate::spectral::{adjacency_spectral_radius, survivability_score, PowerIteration, CRITICAL_BAND};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsolationReport {
    pub strategy: String,
    pub edges_removed_count: usize,
    pub edges_removed: Vec<(usize, usize)>,
    pub edges_added_count: usize,
    pub lambda1_before: f64,
    pub lambda1_after: f64,
    /// Spectral radius after each greedy removal.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambda1_trace: Vec<f64>,
    pub score_before: Option<f64>,
    pub score_after: Option<f64>,
    pub fast_extinction_before: Option<bool>,
    pub fast_extinction_after: Option<bool>,
    /// The strategy moved the score from `>= 1` to `< 1`.
    pub crossed_threshold: Option<bool>,
    pub connectivity_after: usize,
    /// Nodes left outside the torus by lattice rewiring.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub surplus_nodes: Vec<usize>,
}

fn lambda1(g: &Graph) -> Result<f64> {
    if g.node_count() == 0 {
        return Ok(0.0);
    }
    Ok(adjacency_spectral_radius(g, &PowerIteration::<f64>::default())?.value)
}

fn base_report(strategy: &str, before: &Graph, after: &Graph) -> Result<IsolationReport> {
    let removed: Vec<_> = before
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| !after.has_edge(u, v))
        .collect();
    let added = after
        .edges()
        .iter()
        .filter(|&&(u, v)| !before.has_edge(u, v))
        .count();
    Ok(IsolationReport {
        strategy: strategy.to_string(),
        edges_removed_count: removed.len(),
        edges_removed: removed,
        edges_added_count: added,
        lambda1_before: lambda1(before)?,
        lambda1_after: lambda1(after)?,
        lambda1_trace: Vec::new(),
        score_before: None,
        score_after: None,
        fast_extinction_before: None,
        fast_extinction_after: None,
        crossed_threshold: None,
        connectivity_after: after.connected_components(),
        surplus_nodes: Vec::new(),
    })
}

/// Removes `k` edges one at a time, each time the edge `(u, v)` with the
/// largest `x_u * x_v` for the current dominant adjacency eigenvector `x`.
/// Ties go to the lexicographically smallest edge.
pub fn greedy_edge_removal(g: &Graph, k: usize) -> Result<(Graph, IsolationReport)> {
    if k > g.edge_count() {
        return Err(Error::param(
            "k",
            format!("{k} exceeds the edge count {}", g.edge_count()),
        ));
    }
    let opts = PowerIteration::<f64>::default();
    let mut current = g.clone();
    let mut removed = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    for _ in 0..k {
        let x = adjacency_spectral_radius(&current, &opts)?.vector;
        let mut best: Option<((usize, usize), f64)> = None;
        for &(u, v) in current.edges() {
            let w = x[u] * x[v];
            if best.is_none_or(|(_, b)| w > b) {
                best = Some(((u, v), w));
            }
        }
        let (edge, _) = best.expect("k <= |E| leaves an edge to remove");
        current = current.without_edges(&[edge]);
        removed.push(edge);
        trace.push(lambda1(&current)?);
    }
    let mut report = base_report("greedy", g, &current)?;
    report.edges_removed = removed;
    report.lambda1_trace = trace;
    Ok((current, report))
}

/// Result of the nearest-neighbour walk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CycleSearch {
    /// Node order of a Hamiltonian cycle; the closing edge returns to the first node.
    Found(Vec<usize>),
    /// The walk got stuck or could not close; the visited path so far.
    Failed { partial: Vec<usize>, reason: String },
}

/// Greedy Hamiltonian-cycle walk over existing edges.
///
/// From the current node the walk moves to an unvisited neighbour, preferring
/// in order: neighbours not adjacent to `start` (so a way back stays open),
/// fewest unvisited neighbours of their own, lowest id.
pub fn nn_hamiltonian_cycle(g: &Graph, start: usize) -> Result<CycleSearch> {
    let n = g.node_count();
    if start >= n {
        return Err(Error::param("start", format!("node {start} out of range")));
    }
    let mut visited = vec![false; n];
    let mut path = Vec::with_capacity(n);
    visited[start] = true;
    path.push(start);
    let mut current = start;
    while path.len() < n {
        let next = g
            .neighbors(current)
            .iter()
            .copied()
            .filter(|&v| !visited[v])
            .min_by_key(|&v| {
                let open = g.neighbors(v).iter().filter(|&&w| !visited[w]).count();
                (g.has_edge(v, start), open, v)
            });
        match next {
            Some(v) => {
                visited[v] = true;
                path.push(v);
                current = v;
            }
            None => {
                let hops = path.len() - 1;
                return Ok(CycleSearch::Failed {
                    partial: path,
                    reason: format!("stuck at node {current} after {hops} hops with unvisited nodes left"),
                });
            }
        }
    }
    if n >= 3 && g.has_edge(current, start) {
        Ok(CycleSearch::Found(path))
    } else {
        Ok(CycleSearch::Failed {
            partial: path,
            reason: format!("visited every node but {current} is not adjacent to {start}"),
        })
    }
}

/// Checks that `cycle` visits every node once and that consecutive nodes
/// (including last to first) are adjacent in `g`.
pub fn validate_cycle(g: &Graph, cycle: &[usize]) -> Result<()> {
    let n = g.node_count();
    if cycle.len() != n || n < 3 {
        return Err(Error::InvalidCycle(format!(
            "length {} for a graph on {n} nodes",
            cycle.len()
        )));
    }
    let mut seen = vec![false; n];
    for &v in cycle {
        if v >= n || seen[v] {
            return Err(Error::InvalidCycle(format!("node {v} repeated or out of range")));
        }
        seen[v] = true;
    }
    for k in 0..n {
        let (a, b) = (cycle[k], cycle[(k + 1) % n]);
        if !g.has_edge(a, b) {
            return Err(Error::InvalidCycle(format!("({a}, {b}) is not an edge")));
        }
    }
    Ok(())
}

/// Keeps only the edges of a Hamiltonian cycle.
pub fn prune_to_cycle(g: &Graph, cycle: &[usize]) -> Result<(Graph, IsolationReport)> {
    validate_cycle(g, cycle)?;
    let n = cycle.len();
    let pruned = Graph::from_edges(n, (0..n).map(|k| (cycle[k], cycle[(k + 1) % n])))?;
    let report = base_report("cycle", g, &pruned)?;
    Ok((pruned, report))
}

/// Torus dimensions `rows x cols = m` with both factors at least 3, taking
/// the largest `rows <= floor(sqrt(m))` that divides `m`.
fn torus_dims(m: usize) -> Option<(usize, usize)> {
    let mut rows = (m as f64).sqrt().floor() as usize;
    while rows * rows > m {
        rows -= 1;
    }
    while (rows + 1) * (rows + 1) <= m {
        rows += 1;
    }
    (3..=rows).rev().find(|r| m % r == 0).map(|r| (r, m / r))
}

/// Replaces the edge set by a lattice-4 torus on the same nodes.
///
/// Nodes `0..m` fill the grid in row-major order, where `m <= n` is the
/// largest count admitting a `rows x cols` factorization with both factors at
/// least 3. Each surplus node `m + k` is chained into the torus by
/// subdividing the horizontal edge leaving grid node `k`, so it ends up with
/// degree 2 and grid degrees stay 4.
pub fn rewire_to_lattice(g: &Graph) -> Result<(Graph, IsolationReport)> {
    let n = g.node_count();
    if n < 9 {
        return Err(Error::param("n", format!("{n} nodes; lattice rewiring needs at least 9")));
    }
    let (m, (rows, cols)) = (9..=n)
        .rev()
        .find_map(|m| torus_dims(m).map(|d| (m, d)))
        .expect("9 = 3 x 3 always factors");
    let torus = gen_lattice4(rows, cols)?;
    let surplus: Vec<usize> = (m..n).collect();
    let mut split = Vec::with_capacity(surplus.len());
    for (k, &s) in surplus.iter().enumerate() {
        let (i, j) = (k / cols, k % cols);
        let right = i * cols + (j + 1) % cols;
        split.push(((k.min(right), k.max(right)), s));
    }
    let mut edges: Vec<(usize, usize)> = torus
        .edges()
        .iter()
        .copied()
        .filter(|e| !split.iter().any(|(se, _)| se == e))
        .collect();
    for &((a, b), s) in &split {
        edges.push((a, s));
        edges.push((b, s));
    }
    let lattice = Graph::from_edges(n, edges)?;
    let mut report = base_report("lattice", g, &lattice)?;
    report.surplus_nodes = surplus;
    Ok((lattice, report))
}

/// Homogeneous SIS parameters used to score a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ScoreParams {
    pub delta: f64,
    pub gamma: f64,
    pub r: f64,
    pub beta: f64,
}

fn score(g: &Graph, p: &ScoreParams) -> Result<f64> {
    let links = LinkProbs::homogeneous(g, p.beta)?;
    let params = NodeParams::<f64>::sis(g.node_count(), p.r, p.delta, p.gamma);
    Ok(survivability_score(&links, &params, &PowerIteration::default(), CRITICAL_BAND)?.score)
}

/// Compares two graphs on the same node set: spectral radii, survivability
/// scores with `beta` placed on every surviving edge, and connectivity.
pub fn evaluate_strategy(strategy: &str, before: &Graph, after: &Graph, params: &ScoreParams) -> Result<IsolationReport> {
    if before.node_count() != after.node_count() {
        return Err(Error::param(
            "graphs",
            format!("node sets differ: {} vs {}", before.node_count(), after.node_count()),
        ));
    }
    let mut report = base_report(strategy, before, after)?;
    let (sb, sa) = (score(before, params)?, score(after, params)?);
    report.score_before = Some(sb);
    report.score_after = Some(sa);
    report.fast_extinction_before = Some(sb < 1.0);
    report.fast_extinction_after = Some(sa < 1.0);
    report.crossed_threshold = Some(sb >= 1.0 && sa < 1.0);
    Ok(report)
}

/// Fills the score fields of a strategy report in place.
pub fn attach_scores(report: &mut IsolationReport, before: &Graph, after: &Graph, params: &ScoreParams) -> Result<()> {
    let scored = evaluate_strategy(&report.strategy, before, after, params)?;
    report.score_before = scored.score_before;
    report.score_after = scored.score_after;
    report.fast_extinction_before = scored.fast_extinction_before;
    report.fast_extinction_after = scored.fast_extinction_after;
    report.crossed_threshold = scored.crossed_threshold;
    Ok(())
}
