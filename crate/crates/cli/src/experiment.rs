//! Runs an experiment config point by point and writes CSVs plus a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use epinet::continuous::{integrate, OdeModel, OdeParams, OdeState, Trajectory};
use epinet::graph::{save_edge_list, Graph};
use epinet::meanfield::{run, BoundPolicy, LinkProbs, MfRun, MfState, NodeParams, RunOptions};
use epinet::spectral::{survivability_score, PowerIteration, CRITICAL_BAND};
use epinet::stochastic::{mc_ensemble, EnsembleResult, EnsembleSpec};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ModelKind, ParamBlock};
use crate::error::{CliError, CliResult, ErrorBody};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GRAPH_FILE: &str = "graph.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub values: BTreeMap<String, f64>,
    pub file: Option<String>,
    pub score: Option<f64>,
    pub fast_extinction: Option<String>,
    /// Steps that left the probability simplex under the reporting policy.
    #[serde(default)]
    pub bound_violations: usize,
    pub error: Option<ErrorBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub model: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub files: Vec<String>,
    pub swept_values: Vec<BTreeMap<String, f64>>,
    pub scores: Vec<Option<f64>>,
    pub points: Vec<PointRecord>,
}

#[derive(Debug, Clone)]
pub enum PointOutput {
    Ode(Trajectory<f64>),
    MeanField(MfRun<f64>),
    MonteCarlo(EnsembleResult),
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub manifest: Manifest,
    pub outputs: Vec<Option<PointOutput>>,
    pub graph: Option<Graph>,
    pub dir: PathBuf,
}

fn ode_point(config: &ExperimentConfig, p: &ParamBlock) -> CliResult<Trajectory<f64>> {
    let mu = p.get("mu").unwrap_or(0.0);
    let pr = OdeParams::new(p.req("beta"), p.req("gamma"), mu)?;
    let init = config.init();
    let (model, st0) = match config.model {
        ModelKind::SisOde => (OdeModel::Sis, OdeState::sis(init)),
        ModelKind::SirOde => (OdeModel::SirEpidemic, OdeState::sir(config.run.s0.unwrap_or(1.0 - init), init)),
        ModelKind::SirEndemicOde => (OdeModel::SirEndemic, OdeState::sir(config.run.s0.unwrap_or(1.0 - init), init)),
        _ => unreachable!("not an ODE model"),
    };
    Ok(integrate(model, st0, &pr, config.dt(), config.t_end())?)
}

fn node_params(n: usize, p: &ParamBlock) -> NodeParams<f64> {
    NodeParams::homogeneous(
        n,
        p.req("r"),
        p.req("delta"),
        p.req("gamma"),
        p.get("nu").unwrap_or(1.0),
        p.get("chi").unwrap_or(0.0),
    )
}

fn discrete_point(config: &ExperimentConfig, g: &Graph, p: &ParamBlock) -> CliResult<(PointOutput, usize)> {
    let model = config.model.discrete_model().expect("graph model");
    let links = LinkProbs::homogeneous(g, p.req("beta"))?;
    let params = node_params(g.node_count(), p);
    if config.model.is_mc() {
        let spec = EnsembleSpec {
            model,
            init_fraction: config.init(),
            steps: config.steps(),
            runs: config.runs(),
            seed: config.run.seed.unwrap_or(0),
        };
        return Ok((PointOutput::MonteCarlo(mc_ensemble(&links, &params, &spec)?), 0));
    }
    let opts = RunOptions {
        max_steps: config.steps(),
        tol: config.tol(),
        bounds: if config.run.allow_negative_coefficients {
            BoundPolicy::Report
        } else {
            BoundPolicy::Strict
        },
    };
    let res = run(model, MfState::uniform(g.node_count(), config.init()), &links, &params, &opts)?;
    let violations = res.violations.len();
    Ok((PointOutput::MeanField(res), violations))
}

/// Survivability score and its classification for homogeneous parameters.
pub fn point_score(g: &Graph, p: &ParamBlock) -> CliResult<(f64, &'static str)> {
    let links = LinkProbs::homogeneous(g, p.req("beta"))?;
    let params = NodeParams::sis(g.node_count(), p.req("r"), p.req("delta"), p.req("gamma"));
    let s = survivability_score(&links, &params, &PowerIteration::default(), CRITICAL_BAND)?;
    Ok((s.score, s.extinction.label()))
}

fn write_output(out: &PointOutput, path: &Path) -> CliResult<()> {
    let mut buf = Vec::new();
    match out {
        PointOutput::Ode(t) => t.write_csv(&mut buf)?,
        PointOutput::MeanField(r) => r.write_csv(&mut buf)?,
        PointOutput::MonteCarlo(e) => e.write_csv(&mut buf)?,
    }
    std::fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

/// Validates `config`, then runs every sweep point into `out_dir`.
///
/// Relative edge-list paths resolve against `base_dir`. A failing point is
/// recorded in the manifest and the remaining points still run.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path, out_dir: &Path) -> CliResult<SweepResult> {
    config.validate()?;
    let graph = match &config.graph {
        Some(spec) => Some(spec.build(base_dir)?),
        None => None,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    let mut files = Vec::new();
    if let Some(g) = &graph {
        save_edge_list(g, out_dir.join(GRAPH_FILE))?;
        files.push(GRAPH_FILE.to_string());
    }

    let points = config.points();
    let width = format!("{}", points.len().saturating_sub(1)).len().max(2);
    let mut records = Vec::with_capacity(points.len());
    let mut outputs = Vec::with_capacity(points.len());
    for point in &points {
        let mut record = PointRecord {
            index: point.index,
            values: point.values.clone(),
            file: None,
            score: None,
            fast_extinction: None,
            bound_violations: 0,
            error: None,
        };
        let computed = match &graph {
            None => ode_point(config, &point.params).map(|t| (PointOutput::Ode(t), 0)),
            Some(g) => point_score(g, &point.params).and_then(|(s, label)| {
                record.score = Some(s);
                record.fast_extinction = Some(label.to_string());
                discrete_point(config, g, &point.params)
            }),
        };
        let written = computed.and_then(|(out, violations)| {
            let name = format!("point_{:0width$}.csv", point.index);
            write_output(&out, &out_dir.join(&name))?;
            Ok((out, violations, name))
        });
        match written {
            Ok((out, violations, name)) => {
                record.bound_violations = violations;
                record.file = Some(name.clone());
                files.push(name);
                outputs.push(Some(out));
            }
            Err(e) => {
                record.error = Some(e.body());
                outputs.push(None);
            }
        }
        records.push(record);
    }

    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION.to_string(),
        model: config.model.name().to_string(),
        config_hash: config.hash(),
        seed: config.seed(),
        files,
        swept_values: records.iter().map(|r| r.values.clone()).collect(),
        scores: records.iter().map(|r| r.score).collect(),
        points: records,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(SweepResult {
        manifest,
        outputs,
        graph,
        dir: out_dir.to_path_buf(),
    })
}

/// Output directory from the config, else `results`.
pub fn default_output(config: &ExperimentConfig) -> PathBuf {
    config.run.output.clone().unwrap_or_else(|| PathBuf::from("results"))
}
