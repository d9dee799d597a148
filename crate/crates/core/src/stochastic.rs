//! Agent-based Monte Carlo of the node state machines behind the mean-field
//! equations.
//!
//! One step, all from the current snapshot and with draws taken in node
//! order:
//!
//! 1. every `HasInfo` node `i` tries to broadcast with probability `r_i`; a
//!    broadcast crosses each outgoing link `i -> j` with probability `beta_ij`
//!    (one draw for the broadcast, then one per link in neighbour order);
//! 2. every node is then resolved in index order:
//!    * `Dead` resurrects to `NoInfo` with probability `gamma_i`;
//!    * any other node first dies with probability `delta_i` (death wins over
//!      a transmission received in the same step);
//!    * a surviving `NoInfo` node that received at least one transmission
//!      becomes `HasInfo` (SIS) or, for SIRS, `HasInfo` with probability
//!      `nu_i` and `Warned` otherwise;
//!    * a surviving `Warned` node reverts to `NoInfo` with probability `chi_i`.
//!
//! Run `k` of an ensemble with master seed `m` uses ChaCha8 seeded with
//! [`run_seed`]`(m, k)`, the SplitMix64 finalizer applied to `m ^ k`.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{LinkProbs, Model, NodeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeState {
    NoInfo,
    HasInfo,
    Warned,
    Dead,
}

impl NodeState {
    pub const ALL: [NodeState; 4] = [
        NodeState::NoInfo,
        NodeState::HasInfo,
        NodeState::Warned,
        NodeState::Dead,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// SplitMix64 finalizer of `master ^ run`.
pub fn run_seed(master: u64, run: u64) -> u64 {
    let mut z = (master ^ run).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Advances every node by one step. Parameters are assumed validated.
pub fn mc_step<R: Rng>(
    states: &[NodeState],
    links: &LinkProbs<f64>,
    params: &NodeParams<f64>,
    model: Model,
    rng: &mut R,
) -> Vec<NodeState> {
    let n = states.len();
    let mut received = vec![false; n];
    for (i, &s) in states.iter().enumerate() {
        if s != NodeState::HasInfo || !(rng.random::<f64>() < params.r[i]) {
            continue;
        }
        for &(j, beta_ij) in links.outgoing(i) {
            if rng.random::<f64>() < beta_ij {
                received[j] = true;
            }
        }
    }
    let mut next = Vec::with_capacity(n);
    for (i, &s) in states.iter().enumerate() {
        let new = match s {
            NodeState::Dead => {
                if rng.random::<f64>() < params.gamma[i] {
                    NodeState::NoInfo
                } else {
                    NodeState::Dead
                }
            }
            _ if rng.random::<f64>() < params.delta[i] => NodeState::Dead,
            NodeState::NoInfo if received[i] => match model {
                Model::Sis => NodeState::HasInfo,
                Model::Sirs => {
                    if rng.random::<f64>() < params.nu[i] {
                        NodeState::HasInfo
                    } else {
                        NodeState::Warned
                    }
                }
            },
            NodeState::Warned if rng.random::<f64>() < params.chi[i] => NodeState::NoInfo,
            other => other,
        };
        next.push(new);
    }
    next
}

/// `count` distinct nodes start in `HasInfo`, the rest in `NoInfo`.
pub fn initial_states<R: Rng>(n: usize, infected: usize, rng: &mut R) -> Vec<NodeState> {
    let mut states = vec![NodeState::NoInfo; n];
    for i in sample(rng, n, infected.min(n)).into_iter() {
        states[i] = NodeState::HasInfo;
    }
    states
}

/// Per-step statistics across runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleRow {
    pub t: usize,
    /// Mean fraction per state, indexed like [`NodeState::ALL`].
    pub mean: [f64; 4],
    /// Population standard deviation per state.
    pub std: [f64; 4],
    /// Mean number of `NoInfo -> HasInfo` transitions so far.
    pub mean_cumulative_infections: f64,
}

impl EnsembleRow {
    pub fn mean_of(&self, s: NodeState) -> f64 {
        self.mean[s.index()]
    }

    pub fn std_of(&self, s: NodeState) -> f64 {
        self.std[s.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub runs: usize,
    pub seed: u64,
    pub rows: Vec<EnsembleRow>,
    /// First step with no `HasInfo` node, per run.
    pub extinction_step: Vec<Option<usize>>,
}

impl EnsembleResult {
    /// Fraction of runs with no carrier left at or before step `t`.
    pub fn extinct_fraction_by(&self, t: usize) -> f64 {
        let hit = self
            .extinction_step
            .iter()
            .filter(|s| s.is_some_and(|s| s <= t))
            .count();
        hit as f64 / self.runs as f64
    }

    /// Writes the ensemble CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "t,frac_noinfo_mean,frac_hasinfo_mean,frac_warned_mean,frac_dead_mean,frac_hasinfo_std"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                r.t, r.mean[0], r.mean[1], r.mean[2], r.mean[3], r.std[1]
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub model: Model,
    /// Fraction of nodes initially `HasInfo`, rounded to a node count.
    pub init_fraction: f64,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
}

/// Independent runs aggregated per step (rows for `t = 0..=steps`).
pub fn mc_ensemble(links: &LinkProbs<f64>, params: &NodeParams<f64>, spec: &EnsembleSpec) -> Result<EnsembleResult> {
    let n = links.node_count();
    if spec.runs == 0 {
        return Err(Error::param("runs", "must be at least 1"));
    }
    if n == 0 {
        return Err(Error::param("graph", "needs at least one node"));
    }
    if !(0.0..=1.0).contains(&spec.init_fraction) {
        return Err(Error::param("init", format!("{} is not in [0, 1]", spec.init_fraction)));
    }
    params.validate(n, spec.model, false)?;
    let infected = (spec.init_fraction * n as f64).round() as usize;
    let width = spec.steps + 1;
    let mut sum = vec![[0.0f64; 4]; width];
    let mut sum_sq = vec![[0.0f64; 4]; width];
    let mut cumulative = vec![0.0f64; width];
    let mut extinction_step = Vec::with_capacity(spec.runs);
    let inv_n = 1.0 / n as f64;

    for run in 0..spec.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed(spec.seed, run as u64));
        let mut states = initial_states(n, infected, &mut rng);
        let mut infections = 0usize;
        let mut extinct = None;
        for t in 0..width {
            if t > 0 {
                let next = mc_step(&states, links, params, spec.model, &mut rng);
                infections += states
                    .iter()
                    .zip(&next)
                    .filter(|(a, b)| **a == NodeState::NoInfo && **b == NodeState::HasInfo)
                    .count();
                states = next;
            }
            let mut counts = [0usize; 4];
            for s in &states {
                counts[s.index()] += 1;
            }
            if extinct.is_none() && counts[NodeState::HasInfo.index()] == 0 {
                extinct = Some(t);
            }
            for k in 0..4 {
                let f = counts[k] as f64 * inv_n;
                sum[t][k] += f;
                sum_sq[t][k] += f * f;
            }
            cumulative[t] += infections as f64;
        }
        extinction_step.push(extinct);
    }

    let runs = spec.runs as f64;
    let rows = (0..width)
        .map(|t| {
            let mut mean = [0.0; 4];
            let mut std = [0.0; 4];
            for k in 0..4 {
                mean[k] = sum[t][k] / runs;
                std[k] = (sum_sq[t][k] / runs - mean[k] * mean[k]).max(0.0).sqrt();
            }
            EnsembleRow {
                t,
                mean,
                std,
                mean_cumulative_infections: cumulative[t] / runs,
            }
        })
        .collect();
    Ok(EnsembleResult {
        runs: spec.runs,
        seed: spec.seed,
        rows,
        extinction_step,
    })
}
