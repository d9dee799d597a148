//! Discrete-time mean-field SIS and SIRS dynamics on a graph.
//!
//! Each node `i` carries the probabilities `p_i` (has info / infected),
//! `q_i` (no info / susceptible) and `w_i` (warned, SIRS only); the dead
//! probability is the remainder `1 - p_i - q_i - w_i`. Node states are
//! treated as independent, so the chance that node `i` receives nothing in a
//! step is
//!
//! ```text
//! zeta_i(t) = prod_j (1 - r_j * beta_ji * p_j(t-1))
//! ```
//!
//! taken over the in-neighbours `j` of `i`. All updates read the `t-1`
//! snapshot only.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{is_probability, Scalar};

/// Slack allowed outside `[0, 1]` before a step is declared invalid.
pub const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Sis,
    Sirs,
}

/// Per-node probabilities per step.
///
/// `r`: broadcast, `delta`: failure, `gamma`: resurrection, `nu`: an exposed
/// susceptible accepts the infection (1 for SIS), `chi`: a warned node
/// reverts to susceptible (unused by SIS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeParams<T> {
    pub r: Vec<T>,
    pub delta: Vec<T>,
    pub gamma: Vec<T>,
    pub nu: Vec<T>,
    pub chi: Vec<T>,
}

impl<T: Scalar> NodeParams<T> {
    /// Same values on every node.
    pub fn homogeneous(n: usize, r: T, delta: T, gamma: T, nu: T, chi: T) -> Self {
        NodeParams {
            r: vec![r; n],
            delta: vec![delta; n],
            gamma: vec![gamma; n],
            nu: vec![nu; n],
            chi: vec![chi; n],
        }
    }

    /// Homogeneous SIS parameters (`nu = 1`, `chi = 0`).
    pub fn sis(n: usize, r: T, delta: T, gamma: T) -> Self {
        Self::homogeneous(n, r, delta, gamma, T::one(), T::zero())
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Checks lengths, that every entry is a probability and that every
    /// `delta_i > 0`. For SIRS also rejects `chi_i + delta_i > 1` unless
    /// `allow_negative_coefficients` is set.
    pub fn validate(&self, n: usize, model: Model, allow_negative_coefficients: bool) -> Result<()> {
        let arrays = [
            ("r", &self.r),
            ("delta", &self.delta),
            ("gamma", &self.gamma),
            ("nu", &self.nu),
            ("chi", &self.chi),
        ];
        for (name, values) in arrays {
            if values.len() != n {
                return Err(Error::param(
                    name,
                    format!("has {} entries for {n} nodes", values.len()),
                ));
            }
            if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !is_probability(**v)) {
                return Err(Error::param(name, format!("node {i}: {v} is not in [0, 1]")));
            }
        }
        if let Some(i) = self.delta.iter().position(|d| *d <= T::zero()) {
            return Err(Error::param("delta", format!("node {i}: failure probability must be > 0")));
        }
        if model == Model::Sirs && !allow_negative_coefficients {
            for (i, (c, d)) in self.chi.iter().zip(&self.delta).enumerate() {
                if *c + *d > T::one() {
                    return Err(Error::NegativeCoefficient {
                        node: i,
                        sum: (*c + *d).as_f64(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-link probabilities `beta(i, j)` that link `i -> j` is up, stored as
/// incoming and outgoing adjacency lists sorted by neighbour id.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProbs<T> {
    incoming: Vec<Vec<(usize, T)>>,
    outgoing: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> LinkProbs<T> {
    /// The same `beta` on both directions of every edge of `g`.
    pub fn homogeneous(g: &Graph, beta: T) -> Result<Self> {
        if !is_probability(beta) {
            return Err(Error::param("beta", format!("{beta} is not in [0, 1]")));
        }
        let lists: Vec<Vec<(usize, T)>> = (0..g.node_count())
            .map(|i| g.neighbors(i).iter().map(|&j| (j, beta)).collect())
            .collect();
        Ok(LinkProbs {
            incoming: lists.clone(),
            outgoing: lists,
        })
    }

    /// Directed link probabilities `(from, to, beta)`. Every link must be an
    /// edge of `g`; missing directions are zero.
    pub fn directed<I>(g: &Graph, links: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let n = g.node_count();
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        for (from, to, beta) in links {
            if !g.has_edge(from, to) {
                return Err(Error::param("beta", format!("link {from} -> {to} is not a graph edge")));
            }
            if !is_probability(beta) {
                return Err(Error::param("beta", format!("link {from} -> {to}: {beta} is not in [0, 1]")));
            }
            outgoing[from].push((to, beta));
            incoming[to].push((from, beta));
        }
        for lists in [&mut incoming, &mut outgoing] {
            for list in lists.iter_mut() {
                list.sort_by_key(|&(j, _)| j);
                if list.windows(2).any(|w| w[0].0 == w[1].0) {
                    return Err(Error::param("beta", "link given twice"));
                }
            }
        }
        Ok(LinkProbs { incoming, outgoing })
    }

    pub fn node_count(&self) -> usize {
        self.incoming.len()
    }

    /// `(j, beta_ji)` for every link `j -> i`.
    pub fn incoming(&self, i: usize) -> &[(usize, T)] {
        &self.incoming[i]
    }

    /// `(j, beta_ij)` for every link `i -> j`.
    pub fn outgoing(&self, i: usize) -> &[(usize, T)] {
        &self.outgoing[i]
    }

    /// Probability that link `i -> j` is up; zero for non-edges.
    pub fn beta(&self, i: usize, j: usize) -> T {
        self.outgoing[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|idx| self.outgoing[i][idx].1)
            .unwrap_or_else(|_| T::zero())
    }
}

/// Mean-field state at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfState<T> {
    pub p: Vec<T>,
    pub q: Vec<T>,
    pub w: Vec<T>,
    pub t: usize,
}

impl<T: Scalar> MfState<T> {
    /// `p = p0`, `q = 1 - p0`, `w = 0` on every node.
    pub fn uniform(n: usize, p0: T) -> Self {
        MfState {
            p: vec![p0; n],
            q: vec![T::one() - p0; n],
            w: vec![T::zero(); n],
            t: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn dead(&self, i: usize) -> T {
        T::one() - self.p[i] - self.q[i] - self.w[i]
    }

    /// First node breaking `p, q, w in [0, 1]` or `p + q + w <= 1` by more
    /// than [`BOUND_TOL`].
    pub fn first_violation(&self) -> Option<usize> {
        let lo = -T::lit(BOUND_TOL);
        let hi = T::one() + T::lit(BOUND_TOL);
        (0..self.len()).find(|&i| {
            let (p, q, w) = (self.p[i], self.q[i], self.w[i]);
            let out = |x: T| !(x >= lo && x <= hi);
            out(p) || out(q) || out(w) || !(p + q + w <= hi)
        })
    }

    fn violation_error(&self, node: usize) -> Error {
        Error::BoundViolation {
            step: self.t,
            node,
            p: self.p[node].as_f64(),
            q: self.q[node].as_f64(),
            w: self.w[node].as_f64(),
        }
    }

    fn check(&self) -> Result<()> {
        match self.first_violation() {
            Some(node) => Err(self.violation_error(node)),
            None => Ok(()),
        }
    }

    /// Largest entrywise change in `p`, `q` or `w`.
    pub fn max_change(&self, other: &Self) -> T {
        let diff = |a: &[T], b: &[T]| {
            a.iter()
                .zip(b)
                .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
        };
        diff(&self.p, &other.p)
            .max(diff(&self.q, &other.q))
            .max(diff(&self.w, &other.w))
    }
}

/// Expected number of carriers, `sum_i p_i`.
pub fn expected_carriers<T: Scalar>(st: &MfState<T>) -> T {
    st.p.iter().fold(T::zero(), |acc, &p| acc + p)
}

/// Probability that each node receives no transmission this step.
pub fn zeta<T: Scalar>(prev: &MfState<T>, links: &LinkProbs<T>, params: &NodeParams<T>) -> Vec<T> {
    (0..prev.len())
        .map(|i| {
            links.incoming(i).iter().fold(T::one(), |acc, &(j, beta_ji)| {
                acc * (T::one() - params.r[j] * beta_ji * prev.p[j])
            })
        })
        .collect()
}

/// SIS update without any bound checks.
pub fn sis_update<T: Scalar>(prev: &MfState<T>, links: &LinkProbs<T>, params: &NodeParams<T>) -> MfState<T> {
    let z = zeta(prev, links, params);
    let n = prev.len();
    let mut next = MfState {
        p: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        w: vec![T::zero(); n],
        t: prev.t + 1,
    };
    for i in 0..n {
        let (p, q) = (prev.p[i], prev.q[i]);
        let (delta, gamma) = (params.delta[i], params.gamma[i]);
        next.p.push(p * (T::one() - delta) + q * (T::one() - z[i]));
        next.q.push(q * (z[i] - delta) + (T::one() - p - q) * gamma);
    }
    next
}

/// SIRS update (with the warned state) without any bound checks.
pub fn sirs_update<T: Scalar>(prev: &MfState<T>, links: &LinkProbs<T>, params: &NodeParams<T>) -> MfState<T> {
    let z = zeta(prev, links, params);
    let n = prev.len();
    let mut next = MfState {
        p: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        t: prev.t + 1,
    };
    for i in 0..n {
        let (p, q, w) = (prev.p[i], prev.q[i], prev.w[i]);
        let (delta, gamma, nu, chi) = (params.delta[i], params.gamma[i], params.nu[i], params.chi[i]);
        let exposed = q * (T::one() - z[i]);
        next.p.push(p * (T::one() - delta) + exposed * nu);
        next.q.push(q * (z[i] - delta) + (T::one() - p - q - w) * gamma + chi * w);
        next.w.push(exposed * (T::one() - nu) + (T::one() - chi - delta) * w);
    }
    next
}

fn check_inputs<T: Scalar>(prev: &MfState<T>, links: &LinkProbs<T>) -> Result<()> {
    let n = prev.len();
    if prev.q.len() != n || prev.w.len() != n || links.node_count() != n {
        return Err(Error::param(
            "state",
            format!(
                "size mismatch: p {}, q {}, w {}, links {}",
                n,
                prev.q.len(),
                prev.w.len(),
                links.node_count()
            ),
        ));
    }
    prev.check()
}

/// One synchronous SIS step. Fails when the result leaves the probability
/// simplex, which the equations allow once `delta_i > zeta_i(t)`.
pub fn sis_step<T: Scalar>(prev: &MfState<T>, links: &LinkProbs<T>, params: &NodeParams<T>) -> Result<MfState<T>> {
    check_inputs(prev, links)?;
    params.validate(prev.len(), Model::Sis, false)?;
    if prev.w.iter().any(|w| *w != T::zero()) {
        return Err(Error::param("w", "SIS state must have no warned mass"));
    }
    let next = sis_update(prev, links, params);
    next.check()?;
    Ok(next)
}

/// One synchronous SIRS step. Rejects `chi_i + delta_i > 1`.
pub fn sirs_step<T: Scalar>(prev: &MfState<T>, links: &LinkProbs<T>, params: &NodeParams<T>) -> Result<MfState<T>> {
    check_inputs(prev, links)?;
    params.validate(prev.len(), Model::Sirs, false)?;
    let next = sirs_update(prev, links, params);
    next.check()?;
    Ok(next)
}

/// What `run` does when a step leaves the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundPolicy {
    /// Abort with [`Error::BoundViolation`].
    #[default]
    Strict,
    /// Keep iterating and record the violations. Also lifts the SIRS
    /// `chi + delta <= 1` restriction.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions<T> {
    pub max_steps: usize,
    /// Convergence when the max-norm of the state change drops below this.
    pub tol: T,
    pub bounds: BoundPolicy,
}

/// Aggregate observables at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate<T> {
    pub t: usize,
    pub mean_p: T,
    pub mean_q: T,
    pub mean_w: T,
    pub dead: T,
    pub carriers: T,
}

impl<T: Scalar> Aggregate<T> {
    pub fn of(st: &MfState<T>) -> Self {
        let n = T::from_usize_lossy(st.len().max(1));
        let sum = |v: &[T]| v.iter().fold(T::zero(), |a, &x| a + x);
        let (sp, sq, sw) = (sum(&st.p), sum(&st.q), sum(&st.w));
        let mean_p = sp / n;
        let mean_q = sq / n;
        let mean_w = sw / n;
        Aggregate {
            t: st.t,
            mean_p,
            mean_q,
            mean_w,
            dead: T::one() - mean_p - mean_q - mean_w,
            carriers: sp,
        }
    }
}

/// A step that left the simplex under [`BoundPolicy::Report`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub node: usize,
    pub p: f64,
    pub q: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfRun<T> {
    pub rows: Vec<Aggregate<T>>,
    pub converged: bool,
    pub final_state: MfState<T>,
    /// First violation per offending step; empty under the strict policy.
    pub violations: Vec<Violation>,
}

impl<T: Scalar> MfRun<T> {
    pub fn last(&self) -> &Aggregate<T> {
        self.rows.last().expect("run records the initial state")
    }

    /// Writes `t,mean_p,mean_q,mean_w,dead,carriers` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,mean_p,mean_q,mean_w,dead,carriers")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                r.t, r.mean_p, r.mean_q, r.mean_w, r.dead, r.carriers
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Iterates the chosen model until the state change falls below `tol` or
/// `max_steps` steps have been taken.
pub fn run<T: Scalar>(
    model: Model,
    st0: MfState<T>,
    links: &LinkProbs<T>,
    params: &NodeParams<T>,
    opts: &RunOptions<T>,
) -> Result<MfRun<T>> {
    let report = opts.bounds == BoundPolicy::Report;
    check_inputs(&st0, links)?;
    params.validate(st0.len(), model, report)?;
    if model == Model::Sis && st0.w.iter().any(|w| *w != T::zero()) {
        return Err(Error::param("w", "SIS state must have no warned mass"));
    }
    let update = match model {
        Model::Sis => sis_update::<T>,
        Model::Sirs => sirs_update::<T>,
    };
    let mut rows = vec![Aggregate::of(&st0)];
    let mut violations = Vec::new();
    let mut state = st0;
    let mut converged = false;
    for _ in 0..opts.max_steps {
        let next = update(&state, links, params);
        if let Some(node) = next.first_violation() {
            if !report {
                return Err(next.violation_error(node));
            }
            violations.push(Violation {
                step: next.t,
                node,
                p: next.p[node].as_f64(),
                q: next.q[node].as_f64(),
                w: next.w[node].as_f64(),
            });
        }
        let change = next.max_change(&state);
        rows.push(Aggregate::of(&next));
        state = next;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(MfRun {
        rows,
        converged,
        final_state: state,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_lattice4, Graph};

    fn path2() -> Graph {
        Graph::from_edges(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn zeta_without_infection_is_one() {
        let g = gen_lattice4(3, 3).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.7).unwrap();
        let params = NodeParams::<f64>::sis(9, 1.0, 0.1, 0.1);
        let st = MfState::<f64>::uniform(9, 0.0);
        assert!(zeta(&st, &links, &params).iter().all(|&z| z == 1.0));
    }

    #[test]
    fn zeta_hand_products() {
        // r_j * beta_ji * p_j = 1 * 0.5 * 1 = 0.5 per neighbour.
        let g = path2();
        let links = LinkProbs::homogeneous(&g, 0.5).unwrap();
        let params = NodeParams::<f64>::sis(2, 1.0, 0.1, 0.1);
        let st = MfState { p: vec![0.0, 1.0], q: vec![1.0, 0.0], w: vec![0.0; 2], t: 0 };
        assert_eq!(zeta(&st, &links, &params)[0], 0.5);

        let g = Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.5).unwrap();
        let params = NodeParams::<f64>::sis(3, 1.0, 0.1, 0.1);
        let st = MfState { p: vec![0.0, 1.0, 1.0], q: vec![1.0, 0.0, 0.0], w: vec![0.0; 3], t: 0 };
        assert_eq!(zeta(&st, &links, &params)[0], 0.25);
    }

    #[test]
    fn zeta_uses_incoming_direction() {
        let g = path2();
        let links = LinkProbs::directed(&g, [(1, 0, 0.5)]).unwrap();
        let params = NodeParams::<f64>::sis(2, 1.0, 0.1, 0.1);
        let st = MfState { p: vec![1.0, 1.0], q: vec![0.0, 0.0], w: vec![0.0; 2], t: 0 };
        let z = zeta(&st, &links, &params);
        assert_eq!(z, vec![0.5, 1.0]);
        assert_eq!(links.beta(1, 0), 0.5);
        assert_eq!(links.beta(0, 1), 0.0);
    }

    #[test]
    fn susceptible_fixed_point_without_infection() {
        let g = gen_lattice4(4, 4).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.3).unwrap();
        let (delta, gamma) = (0.2, 0.3);
        let params = NodeParams::<f64>::sis(16, 1.0, delta, gamma);
        let mut st = MfState::<f64>::uniform(16, 0.0);
        st.q = vec![0.4; 16];
        for _ in 0..500 {
            st = sis_step(&st, &links, &params).unwrap();
            assert!(st.p.iter().all(|&p| p == 0.0));
        }
        let target = gamma / (gamma + delta);
        assert!(st.q.iter().all(|q| (q - target).abs() < 1e-12));
    }

    #[test]
    fn full_infection_is_absorbing_without_deaths() {
        // delta must be > 0 for validation, so drive the update directly.
        let g = gen_lattice4(3, 3).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.3).unwrap();
        let params = NodeParams::<f64>::sis(9, 1.0, 0.0, 0.0);
        let mut st = MfState::<f64>::uniform(9, 1.0);
        for _ in 0..10 {
            st = sis_update(&st, &links, &params);
        }
        assert!(st.p.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn silent_nodes_decay_geometrically() {
        let g = gen_lattice4(3, 4).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.9).unwrap();
        let params = NodeParams::<f64>::sis(12, 0.0, 0.15, 0.2);
        let mut st = MfState::<f64>::uniform(12, 0.6);
        for t in 1..=40 {
            st = sis_step(&st, &links, &params).unwrap();
            let expected = 0.6 * 0.85f64.powi(t);
            assert!(st.p.iter().all(|p| (p - expected).abs() < 1e-12));
        }
    }

    #[test]
    fn sis_step_reports_bound_violation() {
        // zeta ~ 0 on the hub while delta = 0.9 drives q negative.
        let g = Graph::star(30);
        let links = LinkProbs::homogeneous(&g, 1.0).unwrap();
        let params = NodeParams::<f64>::sis(30, 1.0, 0.9, 0.1);
        let mut st = MfState::<f64>::uniform(30, 0.5);
        st.p[0] = 0.0;
        st.q[0] = 1.0;
        match sis_step(&st, &links, &params) {
            Err(Error::BoundViolation { node, q, .. }) => {
                assert_eq!(node, 0);
                assert!(q < 0.0);
            }
            other => panic!("expected bound violation, got {other:?}"),
        }
    }

    #[test]
    fn sirs_with_full_acceptance_matches_sis() {
        let g = gen_lattice4(3, 3).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.4).unwrap();
        let params = NodeParams::<f64>::homogeneous(9, 0.8, 0.2, 0.3, 1.0, 0.5);
        let st = MfState::<f64>::uniform(9, 0.3);
        let a = sis_step(&st, &links, &params).unwrap();
        let b = sirs_step(&st, &links, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sirs_without_acceptance_has_no_inflow() {
        let g = gen_lattice4(3, 3).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.4).unwrap();
        let params = NodeParams::<f64>::homogeneous(9, 1.0, 0.2, 0.3, 0.0, 0.3);
        let mut st = MfState::<f64>::uniform(9, 0.5);
        for t in 1..=30 {
            st = sirs_step(&st, &links, &params).unwrap();
            let expected = 0.5 * 0.8f64.powi(t);
            assert!(st.p.iter().all(|p| (p - expected).abs() < 1e-12));
        }
        assert!(st.w.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn sirs_rejects_negative_warned_coefficient() {
        let params = NodeParams::<f64>::homogeneous(4, 1.0, 0.6, 0.6, 1.0, 1.0);
        match params.validate(4, Model::Sirs, false) {
            Err(Error::NegativeCoefficient { node: 0, sum }) => assert!((sum - 1.6).abs() < 1e-12),
            other => panic!("expected rejection, got {other:?}"),
        }
        assert!(params.validate(4, Model::Sirs, true).is_ok());
        assert!(params.validate(4, Model::Sis, false).is_ok());
    }

    #[test]
    fn params_validation() {
        let mut params = NodeParams::<f64>::sis(3, 1.0, 0.1, 0.1);
        params.delta[1] = 0.0;
        assert!(params.validate(3, Model::Sis, false).is_err());
        let mut params = NodeParams::<f64>::sis(3, 1.0, 0.1, 0.1);
        params.r[2] = 1.2;
        assert!(params.validate(3, Model::Sis, false).is_err());
        assert!(NodeParams::<f64>::sis(3, 1.0, 0.1, 0.1).validate(4, Model::Sis, false).is_err());
        assert!(LinkProbs::homogeneous(&path2(), 1.5).is_err());
        assert!(LinkProbs::directed(&path2(), [(0, 0, 0.5)]).is_err());
    }

    #[test]
    fn run_without_infection_converges() {
        let g = gen_lattice4(4, 4).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.4).unwrap();
        let params = NodeParams::<f64>::sis(16, 1.0, 0.3, 0.2);
        let opts = RunOptions { max_steps: 5000, tol: 1e-13, bounds: BoundPolicy::Strict };
        let out = run(Model::Sis, MfState::<f64>::uniform(16, 0.0), &links, &params, &opts).unwrap();
        assert!(out.converged);
        assert!(out.rows.iter().all(|r| r.carriers == 0.0));
        let last = out.last();
        assert!((last.mean_q - 0.4).abs() < 1e-10);
        assert!((last.dead - 0.6).abs() < 1e-10);
    }

    #[test]
    fn run_strict_vs_report() {
        let g = Graph::star(30);
        let links = LinkProbs::homogeneous(&g, 1.0).unwrap();
        let params = NodeParams::<f64>::sis(30, 1.0, 0.9, 0.1);
        let st = MfState::<f64>::uniform(30, 0.5);
        let strict = RunOptions { max_steps: 10, tol: 0.0, bounds: BoundPolicy::Strict };
        assert!(matches!(
            run(Model::Sis, st.clone(), &links, &params, &strict),
            Err(Error::BoundViolation { .. })
        ));
        let report = RunOptions { bounds: BoundPolicy::Report, ..strict };
        let out = run(Model::Sis, st, &links, &params, &report).unwrap();
        assert_eq!(out.rows.len(), 11);
        assert!(!out.violations.is_empty());
    }

    #[test]
    fn carriers_sum() {
        let st = MfState { p: vec![0.2, 0.3, 0.5], q: vec![0.0; 3], w: vec![0.0; 3], t: 0 };
        assert!((expected_carriers::<f64>(&st) - 1.0).abs() < 1e-15);
        assert_eq!(expected_carriers(&MfState::<f64>::uniform(100, 1.0)), 100.0);
        assert_eq!(expected_carriers(&MfState::<f64>::uniform(100, 0.0)), 0.0);
    }

    #[test]
    fn csv_header() {
        let g = gen_lattice4(3, 3).unwrap();
        let links = LinkProbs::homogeneous(&g, 0.4).unwrap();
        let params = NodeParams::<f64>::sis(9, 1.0, 0.3, 0.2);
        let opts = RunOptions { max_steps: 2, tol: 0.0, bounds: BoundPolicy::Strict };
        let out = run(Model::Sis, MfState::<f64>::uniform(9, 0.1), &links, &params, &opts).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("t,mean_p,mean_q,mean_w,dead,carriers"));
        assert_eq!(text.lines().count(), 4);
    }
}
