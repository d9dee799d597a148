//! Experiment configuration: one JSON document per experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use epinet::graph::{gen_binomial, gen_exponential, gen_lattice4, gen_powerlaw, load_edge_list, Graph, RngSeed};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const DEFAULT_STEPS: usize = 500;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_END: f64 = 100.0;
pub const DEFAULT_RUNS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SirOde,
    SirEndemicOde,
    SisOde,
    SisMeanfield,
    SirsMeanfield,
    SisMc,
    SirsMc,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SirOde => "sir_ode",
            ModelKind::SirEndemicOde => "sir_endemic_ode",
            ModelKind::SisOde => "sis_ode",
            ModelKind::SisMeanfield => "sis_meanfield",
            ModelKind::SirsMeanfield => "sirs_meanfield",
            ModelKind::SisMc => "sis_mc",
            ModelKind::SirsMc => "sirs_mc",
        }
    }

    pub fn is_ode(self) -> bool {
        matches!(self, ModelKind::SirOde | ModelKind::SirEndemicOde | ModelKind::SisOde)
    }

    pub fn is_mc(self) -> bool {
        matches!(self, ModelKind::SisMc | ModelKind::SirsMc)
    }

    pub fn is_graph_based(self) -> bool {
        !self.is_ode()
    }

    pub fn discrete_model(self) -> Option<epinet::Model> {
        match self {
            ModelKind::SisMeanfield | ModelKind::SisMc => Some(epinet::Model::Sis),
            ModelKind::SirsMeanfield | ModelKind::SirsMc => Some(epinet::Model::Sirs),
            _ => None,
        }
    }

    /// Parameters the model reads; every one of them must be given.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            ModelKind::SirOde | ModelKind::SisOde => &["beta", "gamma"],
            ModelKind::SirEndemicOde => &["beta", "gamma", "mu"],
            ModelKind::SisMeanfield | ModelKind::SisMc => &["beta", "gamma", "delta", "r"],
            ModelKind::SirsMeanfield | ModelKind::SirsMc => &["beta", "gamma", "delta", "r", "nu", "chi"],
        }
    }

    /// Default initial infected fraction (`i0` for the ODEs, `p0` otherwise).
    pub fn default_init(self) -> f64 {
        match self {
            ModelKind::SirOde | ModelKind::SirEndemicOde => 0.001,
            ModelKind::SisOde => 0.01,
            _ => 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Binomial { n: usize, p: f64, seed: u64 },
    Powerlaw { n: usize, m: usize, seed: u64 },
    Exponential { n: usize, lambda: f64, seed: u64 },
    Lattice4 { rows: usize, cols: usize },
    Complete { n: usize },
    Cycle { n: usize },
    Star { n: usize },
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    pub fn seed(&self) -> Option<u64> {
        match *self {
            GraphSpec::Binomial { seed, .. } | GraphSpec::Powerlaw { seed, .. } | GraphSpec::Exponential { seed, .. } => {
                Some(seed)
            }
            _ => None,
        }
    }

    /// Builds the graph; relative edge-list paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> CliResult<Graph> {
        let g = match self {
            GraphSpec::Binomial { n, p, seed } => gen_binomial(*n, *p, RngSeed(*seed))?,
            GraphSpec::Powerlaw { n, m, seed } => gen_powerlaw(*n, *m, RngSeed(*seed))?,
            GraphSpec::Exponential { n, lambda, seed } => gen_exponential(*n, *lambda, RngSeed(*seed))?,
            GraphSpec::Lattice4 { rows, cols } => gen_lattice4(*rows, *cols)?,
            GraphSpec::Complete { n } => Graph::complete(*n),
            GraphSpec::Cycle { n } => Graph::cycle(*n)?,
            GraphSpec::Star { n } => Graph::star(*n),
            GraphSpec::EdgeList { path } => load_edge_list(base_dir.join(path))?,
        };
        if g.node_count() == 0 {
            return Err(CliError::config("graph", "graph has no nodes"));
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBlock {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub r: Option<f64>,
    pub nu: Option<f64>,
    pub chi: Option<f64>,
    pub mu: Option<f64>,
}

impl ParamBlock {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "beta" => self.beta,
            "gamma" => self.gamma,
            "delta" => self.delta,
            "r" => self.r,
            "nu" => self.nu,
            "chi" => self.chi,
            "mu" => self.mu,
            _ => None,
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "beta" => &mut self.beta,
            "gamma" => &mut self.gamma,
            "delta" => &mut self.delta,
            "r" => &mut self.r,
            "nu" => &mut self.nu,
            "chi" => &mut self.chi,
            "mu" => &mut self.mu,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> bool {
        match self.slot(name) {
            Some(s) => {
                *s = Some(value);
                true
            }
            None => false,
        }
    }

    fn present(&self) -> Vec<&'static str> {
        ["beta", "gamma", "delta", "r", "nu", "chi", "mu"]
            .into_iter()
            .filter(|n| self.get(n).is_some())
            .collect()
    }

    /// Reads a required parameter; call only after validation.
    pub fn req(&self, name: &str) -> f64 {
        self.get(name).unwrap_or_else(|| panic!("parameter {name} missing after validation"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Parameters moved together; each starts from its value in `params`.
    pub parameters: Vec<String>,
    pub increment: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    /// Mean-field early stop on the max-norm state change; 0 runs all steps.
    pub tol: Option<f64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    /// Initial infected fraction.
    pub init: Option<f64>,
    /// Initial susceptible fraction for the SIR models (default `1 - init`).
    pub s0: Option<f64>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub allow_negative_coefficients: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    pub params: ParamBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub run: RunSpec,
}

/// One sweep point: the full parameter block plus the swept values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub params: ParamBlock,
    pub values: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|source| CliError::Json {
            path: origin.to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn steps(&self) -> usize {
        self.run.steps.unwrap_or(DEFAULT_STEPS)
    }

    pub fn dt(&self) -> f64 {
        self.run.dt.unwrap_or(DEFAULT_DT)
    }

    pub fn t_end(&self) -> f64 {
        self.run.t_end.unwrap_or(DEFAULT_T_END)
    }

    pub fn tol(&self) -> f64 {
        self.run.tol.unwrap_or(0.0)
    }

    pub fn runs(&self) -> usize {
        self.run.runs.unwrap_or(DEFAULT_RUNS)
    }

    pub fn init(&self) -> f64 {
        self.run.init.unwrap_or(self.model.default_init())
    }

    /// Master seed recorded in the manifest.
    pub fn seed(&self) -> Option<u64> {
        if self.model.is_mc() {
            Some(self.run.seed.unwrap_or(0))
        } else {
            self.graph.as_ref().and_then(GraphSpec::seed)
        }
    }

    /// SHA-256 of the canonical (sorted-key, compact) JSON form.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let Some(sweep) = &self.sweep else {
            return vec![SweepPoint {
                index: 0,
                params: self.params.clone(),
                values: BTreeMap::new(),
            }];
        };
        (0..sweep.count)
            .map(|k| {
                let mut params = self.params.clone();
                let mut values = BTreeMap::new();
                for name in &sweep.parameters {
                    let v = self.params.req(name) + k as f64 * sweep.increment;
                    params.set(name, v);
                    values.insert(name.clone(), v);
                }
                SweepPoint { index: k, params, values }
            })
            .collect()
    }

    /// Checks everything that can be checked without running the model.
    pub fn validate(&self) -> CliResult<()> {
        let wanted = self.model.parameters();
        for name in wanted {
            match self.params.get(name) {
                None => {
                    return Err(CliError::config(
                        format!("params.{name}"),
                        format!("required by model {}", self.model.name()),
                    ))
                }
                Some(v) if !v.is_finite() => {
                    return Err(CliError::config(format!("params.{name}"), "must be finite"))
                }
                _ => {}
            }
        }
        for name in self.params.present() {
            if !wanted.contains(&name) {
                return Err(CliError::config(
                    format!("params.{name}"),
                    format!("not used by model {}", self.model.name()),
                ));
            }
        }

        if let Some(sweep) = &self.sweep {
            if sweep.count == 0 {
                return Err(CliError::config("sweep.count", "must be at least 1"));
            }
            if sweep.parameters.is_empty() {
                return Err(CliError::config("sweep.parameters", "names no parameter"));
            }
            if !sweep.increment.is_finite() {
                return Err(CliError::config("sweep.increment", "must be finite"));
            }
            for name in &sweep.parameters {
                if !wanted.contains(&name.as_str()) {
                    return Err(CliError::config(
                        "sweep.parameters",
                        format!("`{name}` is not a parameter of model {}", self.model.name()),
                    ));
                }
            }
        }

        for point in self.points() {
            for name in wanted {
                let v = point.params.req(name);
                let what = if self.sweep.is_some() {
                    format!("params.{name} (sweep point {})", point.index)
                } else {
                    format!("params.{name}")
                };
                if self.model.is_ode() {
                    if v < 0.0 {
                        return Err(CliError::config(what, format!("rate {v} is negative")));
                    }
                } else if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::config(what, format!("{v} is not a probability in [0, 1]")));
                }
            }
            if self.model.discrete_model().is_some() && point.params.req("delta") <= 0.0 {
                return Err(CliError::config(
                    format!("params.delta (sweep point {})", point.index),
                    "must be positive",
                ));
            }
        }

        match (&self.graph, self.model.is_graph_based()) {
            (None, true) => return Err(CliError::config("graph", format!("required by model {}", self.model.name()))),
            (Some(_), false) => {
                return Err(CliError::config("graph", format!("not used by model {}", self.model.name())))
            }
            _ => {}
        }

        let init = self.init();
        if !(0.0..=1.0).contains(&init) {
            return Err(CliError::config("run.init", format!("{init} is not a fraction in [0, 1]")));
        }
        if let Some(s0) = self.run.s0 {
            if !matches!(self.model, ModelKind::SirOde | ModelKind::SirEndemicOde) {
                return Err(CliError::config("run.s0", "only the SIR models take s0"));
            }
            if s0 < 0.0 || s0 + init > 1.0 {
                return Err(CliError::config("run.s0", "s0 and init must be nonnegative and sum to at most 1"));
            }
        }
        if self.model.is_ode() {
            if !(self.dt() > 0.0 && self.dt().is_finite()) {
                return Err(CliError::config("run.dt", "must be positive"));
            }
            if !(self.t_end() > 0.0 && self.t_end().is_finite()) {
                return Err(CliError::config("run.t_end", "must be positive"));
            }
        } else {
            if self.steps() == 0 {
                return Err(CliError::config("run.steps", "must be at least 1"));
            }
            if !(self.tol() >= 0.0) {
                return Err(CliError::config("run.tol", "must be nonnegative"));
            }
        }
        if self.model.is_mc() && self.runs() == 0 {
            return Err(CliError::config("run.runs", "must be at least 1"));
        }
        if self.run.allow_negative_coefficients && !matches!(self.model, ModelKind::SisMeanfield | ModelKind::SirsMeanfield) {
            return Err(CliError::config(
                "run.allow_negative_coefficients",
                "only applies to the mean-field models",
            ));
        }
        Ok(())
    }
}
