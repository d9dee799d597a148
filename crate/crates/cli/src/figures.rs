//! Bundled figure configs, each paired with the
//! qualitative claim it is checked against.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, GraphSpec, ModelKind, ParamBlock, RunSpec, SweepSpec};
use crate::error::{CliError, CliResult};
use crate::experiment::{run_experiment, PointOutput, SweepResult};

pub const GRAPH_SEED: u64 = 1;
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";

/// How a figure's points are judged.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// The infected curve has exactly one interior maximum.
    SinglePeak,
    /// `i(t)` rises monotonically and ends at `1 - gamma / beta`.
    SisEquilibrium,
    /// Terminal mean `p` exceeds terminal mean `q`.
    InfectedExceedSusceptible,
    /// Terminal carriers fall below `1e-6` of the initial carriers.
    CarriersVanish,
    /// Terminal carriers stay below those of the named figure at the same point.
    FewerCarriersThan(&'static str),
    /// No claim; terminal states are reported only.
    Observe,
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub name: &'static str,
    pub claim: &'static str,
    pub config: ExperimentConfig,
    pub check: Check,
}

fn powerlaw() -> GraphSpec {
    GraphSpec::Powerlaw {
        n: 1000,
        m: 2,
        seed: GRAPH_SEED,
    }
}

fn lattice() -> GraphSpec {
    GraphSpec::Lattice4 { rows: 25, cols: 40 }
}

fn five(parameters: &[&str]) -> Option<SweepSpec> {
    Some(SweepSpec {
        parameters: parameters.iter().map(|s| s.to_string()).collect(),
        increment: 0.05,
        count: 5,
    })
}

fn sis_params(delta: f64, gamma: f64, beta: f64) -> ParamBlock {
    ParamBlock {
        beta: Some(beta),
        gamma: Some(gamma),
        delta: Some(delta),
        r: Some(1.0),
        ..ParamBlock::default()
    }
}

fn sirs_params() -> ParamBlock {
    ParamBlock {
        nu: Some(1.0),
        chi: Some(1.0),
        ..sis_params(0.6, 0.6, 0.3)
    }
}

fn meanfield(name: &str, model: ModelKind, graph: GraphSpec, params: ParamBlock, sweep: Option<SweepSpec>) -> ExperimentConfig {
    ExperimentConfig {
        name: Some(name.to_string()),
        model,
        graph: Some(graph),
        params,
        sweep,
        run: RunSpec {
            steps: Some(500),
            init: Some(0.1),
            allow_negative_coefficients: model == ModelKind::SirsMeanfield,
            ..RunSpec::default()
        },
    }
}

pub fn bundled() -> Vec<Figure> {
    use ModelKind::*;
    vec![
        Figure {
            name: "sir",
            claim: "the infected curve reaches one peak and then decreases until it is extinguished",
            config: ExperimentConfig {
                name: Some("sir".into()),
                model: SirOde,
                graph: None,
                params: ParamBlock {
                    beta: Some(0.8),
                    gamma: Some(0.1),
                    ..ParamBlock::default()
                },
                sweep: None,
                run: RunSpec {
                    init: Some(0.001),
                    s0: Some(0.999),
                    ..RunSpec::default()
                },
            },
            check: Check::SinglePeak,
        },
        Figure {
            name: "sis",
            claim: "infected fraction converges monotonically to 1 - gamma/beta = 0.9",
            config: ExperimentConfig {
                name: Some("sis".into()),
                model: SisOde,
                graph: None,
                params: ParamBlock {
                    beta: Some(1.0),
                    gamma: Some(0.1),
                    ..ParamBlock::default()
                },
                sweep: None,
                run: RunSpec {
                    init: Some(0.01),
                    ..RunSpec::default()
                },
            },
            check: Check::SisEquilibrium,
        },
        Figure {
            name: "sis_powerlaw",
            claim: "on a power-law graph the number of infected ends above the number of susceptible",
            config: meanfield("sis_powerlaw", SisMeanfield, powerlaw(), sis_params(0.1, 0.1, 0.1), five(&["gamma", "beta"])),
            check: Check::InfectedExceedSusceptible,
        },
        Figure {
            name: "sis_lattice",
            claim: "same parameters on a lattice: trajectories differ from the power-law case",
            config: meanfield("sis_lattice", SisMeanfield, lattice(), sis_params(0.1, 0.1, 0.1), five(&["gamma", "beta"])),
            check: Check::Observe,
        },
        Figure {
            name: "sis_powerlaw_delta",
            claim: "on a power-law graph the number of infected ends above the number of susceptible",
            config: meanfield("sis_powerlaw_delta", SisMeanfield, powerlaw(), sis_params(0.5, 0.3, 0.4), five(&["delta"])),
            check: Check::InfectedExceedSusceptible,
        },
        Figure {
            name: "sis_lattice_delta",
            claim: "on a lattice the process reaches fast extinction",
            config: meanfield("sis_lattice_delta", SisMeanfield, lattice(), sis_params(0.5, 0.3, 0.4), five(&["delta"])),
            check: Check::CarriersVanish,
        },
        Figure {
            name: "sirs_powerlaw",
            claim: "on a power-law graph the number of infected ends above the number of susceptible",
            config: meanfield("sirs_powerlaw", SirsMeanfield, powerlaw(), sirs_params(), five(&["gamma"])),
            check: Check::InfectedExceedSusceptible,
        },
        Figure {
            name: "sirs_lattice",
            claim: "topology matters: the lattice ends with fewer carriers than the power-law graph",
            config: meanfield("sirs_lattice", SirsMeanfield, lattice(), sirs_params(), five(&["gamma"])),
            check: Check::FewerCarriersThan("sirs_powerlaw"),
        },
        Figure {
            name: "topology_powerlaw",
            claim: "power-law half of the topology comparison at delta=0.65, gamma=0.3, r=1, beta=0.4",
            config: meanfield("topology_powerlaw", SisMeanfield, powerlaw(), sis_params(0.65, 0.3, 0.4), None),
            check: Check::Observe,
        },
        Figure {
            name: "topology_lattice",
            claim: "lattice half of the topology comparison at delta=0.65, gamma=0.3, r=1, beta=0.4",
            config: meanfield("topology_lattice", SisMeanfield, lattice(), sis_params(0.65, 0.3, 0.4), None),
            check: Check::Observe,
        },
    ]
}

/// Terminal observables of one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub t: f64,
    pub infected: f64,
    pub susceptible: f64,
    pub other: f64,
    pub carriers_start: Option<f64>,
    pub carriers_end: Option<f64>,
}

fn terminal(out: &PointOutput) -> Terminal {
    match out {
        PointOutput::Ode(traj) => {
            let (t, st) = traj.last().expect("trajectory has a state");
            Terminal {
                t,
                infected: st.i,
                susceptible: st.s,
                other: st.r,
                carriers_start: None,
                carriers_end: None,
            }
        }
        PointOutput::MeanField(run) => {
            let last = run.last();
            Terminal {
                t: last.t as f64,
                infected: last.mean_p,
                susceptible: last.mean_q,
                other: last.mean_w + last.dead,
                carriers_start: Some(run.rows[0].carriers),
                carriers_end: Some(last.carriers),
            }
        }
        PointOutput::MonteCarlo(res) => {
            let last = res.rows.last().expect("ensemble has rows");
            Terminal {
                t: last.t as f64,
                infected: last.mean[1],
                susceptible: last.mean[0],
                other: last.mean[2] + last.mean[3],
                carriers_start: None,
                carriers_end: None,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub figure: String,
    pub point: usize,
    pub swept: BTreeMap<String, f64>,
    pub score: Option<f64>,
    pub fast_extinction: Option<String>,
    pub terminal: Option<Terminal>,
    pub claim_holds: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSummary {
    pub name: String,
    pub claim: String,
    pub directory: String,
    pub config: String,
    /// `None` when the figure carries no checkable claim.
    pub claim_holds: Option<bool>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyComparison {
    pub powerlaw_score: f64,
    pub lattice_score: f64,
    pub claim_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub figures: Vec<FigureSummary>,
    pub topology: Option<TopologyComparison>,
}

fn interior_maxima(values: &[f64]) -> usize {
    (1..values.len().saturating_sub(1))
        .filter(|&k| values[k] > values[k - 1] && values[k] >= values[k + 1])
        .count()
}

fn judge(check: &Check, cfg: &ExperimentConfig, out: &PointOutput, idx: usize, done: &[(String, SweepResult)]) -> Option<bool> {
    let term = terminal(out);
    match check {
        Check::Observe => None,
        Check::SinglePeak => match out {
            PointOutput::Ode(traj) => {
                let i: Vec<f64> = traj.states.iter().map(|s| s.i).collect();
                Some(interior_maxima(&i) == 1)
            }
            _ => Some(false),
        },
        Check::SisEquilibrium => match out {
            PointOutput::Ode(traj) => {
                let eq = 1.0 - cfg.params.req("gamma") / cfg.params.req("beta");
                let monotone = traj.states.windows(2).all(|w| w[1].i >= w[0].i);
                Some(monotone && (term.infected - eq).abs() < 1e-6)
            }
            _ => Some(false),
        },
        Check::InfectedExceedSusceptible => Some(term.infected > term.susceptible),
        Check::CarriersVanish => match (term.carriers_start, term.carriers_end) {
            (Some(c0), Some(c)) => Some(c < 1e-6 * c0),
            _ => Some(false),
        },
        Check::FewerCarriersThan(other) => {
            let reference = done
                .iter()
                .find(|(n, _)| n == other)
                .and_then(|(_, r)| r.outputs.get(idx).cloned().flatten())?;
            Some(term.infected < terminal(&reference).infected)
        }
    }
}

fn summary_csv(summary: &Summary) -> String {
    let mut s = String::from(
        "figure,point,swept,score,fast_extinction,final_t,infected,susceptible,other,claim_holds,error\n",
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.15e}")).unwrap_or_default();
    for fig in &summary.figures {
        for row in &fig.rows {
            let swept = row
                .swept
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            let t = row.terminal;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},\"{}\"\n",
                row.figure,
                row.point,
                swept,
                opt(row.score),
                row.fast_extinction.as_deref().unwrap_or(""),
                opt(t.map(|t| t.t)),
                opt(t.map(|t| t.infected)),
                opt(t.map(|t| t.susceptible)),
                opt(t.map(|t| t.other)),
                row.claim_holds.map(|b| b.to_string()).unwrap_or_default(),
                row.error.as_deref().unwrap_or("").replace('"', "'"),
            ));
        }
    }
    s
}

/// Runs every bundled figure into `out_dir/<figure>/` and writes
/// `summary.json`, `summary.csv` and the configs under `out_dir/configs/`.
pub fn reproduce_figures(out_dir: &Path) -> CliResult<Summary> {
    let configs_dir = out_dir.join("configs");
    std::fs::create_dir_all(&configs_dir).map_err(|e| CliError::io(&configs_dir, e))?;
    let mut done: Vec<(String, SweepResult)> = Vec::new();
    let mut figures = Vec::new();
    for fig in bundled() {
        let cfg_name = format!("{}.json", fig.name);
        let cfg_path = configs_dir.join(&cfg_name);
        let text = serde_json::to_string_pretty(&fig.config).expect("config serializes");
        std::fs::write(&cfg_path, text + "\n").map_err(|e| CliError::io(&cfg_path, e))?;

        let dir = out_dir.join(fig.name);
        let result = run_experiment(&fig.config, out_dir, &dir)?;
        let rows: Vec<SummaryRow> = result
            .manifest
            .points
            .iter()
            .zip(&result.outputs)
            .map(|(rec, out)| SummaryRow {
                figure: fig.name.to_string(),
                point: rec.index,
                swept: rec.values.clone(),
                score: rec.score,
                fast_extinction: rec.fast_extinction.clone(),
                terminal: out.as_ref().map(terminal),
                claim_holds: match out {
                    Some(o) => judge(&fig.check, &fig.config, o, rec.index, &done),
                    None if fig.check == Check::Observe => None,
                    None => Some(false),
                },
                error: rec.error.as_ref().map(|e| e.message.clone()),
            })
            .collect();
        let claim_holds = if fig.check == Check::Observe {
            None
        } else {
            Some(rows.iter().all(|r| r.claim_holds == Some(true)))
        };
        figures.push(FigureSummary {
            name: fig.name.to_string(),
            claim: fig.claim.to_string(),
            directory: fig.name.to_string(),
            config: format!("configs/{cfg_name}"),
            claim_holds,
            rows,
        });
        done.push((fig.name.to_string(), result));
    }

    let score_of = |name: &str| {
        done.iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, r)| r.manifest.scores.first().copied().flatten())
    };
    let topology = match (score_of("topology_powerlaw"), score_of("topology_lattice")) {
        (Some(p), Some(l)) => Some(TopologyComparison {
            powerlaw_score: p,
            lattice_score: l,
            claim_holds: p > l && p > 1.0 && l < 1.0,
        }),
        _ => None,
    };
    let summary = Summary { figures, topology };
    let json_path = out_dir.join(SUMMARY_JSON);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&json_path, text + "\n").map_err(|e| CliError::io(&json_path, e))?;
    let csv_path = out_dir.join(SUMMARY_CSV);
    std::fs::write(&csv_path, summary_csv(&summary)).map_err(|e| CliError::io(&csv_path, e))?;
    Ok(summary)
}
