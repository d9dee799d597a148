use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epinet::continuous::{integrate, OdeModel, OdeParams, OdeState};
use epinet::graph::{load_edge_list, save_edge_list, Graph};
use epinet::isolation::{
    attach_scores, greedy_edge_removal, nn_hamiltonian_cycle, prune_to_cycle, rewire_to_lattice, CycleSearch,
    ScoreParams,
};
use epinet::meanfield::{run, BoundPolicy, LinkProbs, MfState, NodeParams, RunOptions};
use epinet::spectral::{survivability_score, PowerIteration, CRITICAL_BAND};
use epinet::stochastic::{mc_ensemble, EnsembleSpec};
use epinet::Model;
use epinet_cli::config::GraphSpec;
use epinet_cli::experiment::default_output;
use epinet_cli::{reproduce_figures, run_experiment, CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "epinet", version, about = "Epidemic dynamics on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Integrate a continuous SIR/SIS model to CSV.
    Ode(OdeArgs),
    /// Run the discrete mean-field model on a graph.
    Meanfield(MeanfieldArgs),
    /// Run a Monte Carlo ensemble on a graph.
    Mc(McArgs),
    /// Survivability score of homogeneous SIS parameters on a graph.
    Spectral(SpectralArgs),
    /// Apply an isolation strategy and report its effect.
    Isolate(IsolateArgs),
    /// Run an experiment config (one CSV per sweep point plus a manifest).
    Sweep(SweepArgs),
    /// Run every bundled figure config and write a summary.
    ReproduceFigures(FiguresArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Binomial,
    Powerlaw,
    Exponential,
    Lattice4,
    Complete,
    Cycle,
    Star,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability (binomial).
    #[arg(long)]
    p: Option<f64>,
    /// Edges per new node (powerlaw).
    #[arg(long)]
    m: Option<usize>,
    /// Mean target degree (exponential).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OdeKind {
    Sir,
    SirEndemic,
    Sis,
}

#[derive(Args)]
struct OdeArgs {
    #[arg(long, value_enum)]
    model: OdeKind,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Initial infected fraction.
    #[arg(long)]
    i0: f64,
    /// Initial susceptible fraction for SIR (default 1 - i0).
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 100.0)]
    t_end: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiscreteKind {
    Sis,
    Sirs,
}

impl From<DiscreteKind> for Model {
    fn from(k: DiscreteKind) -> Self {
        match k {
            DiscreteKind::Sis => Model::Sis,
            DiscreteKind::Sirs => Model::Sirs,
        }
    }
}

#[derive(Args)]
struct NodeArgs {
    /// Edge-list file.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "sis")]
    model: DiscreteKind,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.0)]
    chi: f64,
}

impl NodeArgs {
    fn load(&self) -> CliResult<(Graph, LinkProbs<f64>, NodeParams<f64>)> {
        let g = load_edge_list(&self.graph)?;
        let links = LinkProbs::homogeneous(&g, self.beta)?;
        let params = NodeParams::homogeneous(g.node_count(), self.r, self.delta, self.gamma, self.nu, self.chi);
        Ok((g, links, params))
    }
}

#[derive(Args)]
struct MeanfieldArgs {
    #[command(flatten)]
    node: NodeArgs,
    #[arg(long, default_value_t = 0.1)]
    p0: f64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// Stop once the max-norm state change drops below this (0 runs all steps).
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    /// Keep going when a step leaves [0, 1] and report the violations instead.
    #[arg(long)]
    allow_negative_coefficients: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    node: NodeArgs,
    /// Initial infected fraction.
    #[arg(long, default_value_t = 0.1)]
    init: f64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = CRITICAL_BAND)]
    band: f64,
    /// Also write the dominant eigenvector as `node,value` CSV.
    #[arg(long)]
    vector_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Greedy,
    Cycle,
    Lattice,
}

#[derive(Args)]
struct IsolateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// Edges to remove (greedy).
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Start node of the cycle walk.
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// JSON file with `delta`, `gamma`, `r`, `beta` used to score both graphs.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Edge-list file for the modified graph.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.output`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FiguresArgs {
    #[arg(long, default_value = "figures")]
    out: PathBuf,
}

fn need<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this family")))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let spec = match a.family {
        Family::Binomial => GraphSpec::Binomial {
            n: need(a.n, "n")?,
            p: need(a.p, "p")?,
            seed: a.seed,
        },
        Family::Powerlaw => GraphSpec::Powerlaw {
            n: need(a.n, "n")?,
            m: need(a.m, "m")?,
            seed: a.seed,
        },
        Family::Exponential => GraphSpec::Exponential {
            n: need(a.n, "n")?,
            lambda: need(a.lambda, "lambda")?,
            seed: a.seed,
        },
        Family::Lattice4 => GraphSpec::Lattice4 {
            rows: need(a.rows, "rows")?,
            cols: need(a.cols, "cols")?,
        },
        Family::Complete => GraphSpec::Complete { n: need(a.n, "n")? },
        Family::Cycle => GraphSpec::Cycle { n: need(a.n, "n")? },
        Family::Star => GraphSpec::Star { n: need(a.n, "n")? },
    };
    let g = spec.build(Path::new("."))?;
    save_edge_list(&g, &a.out)?;
    let dist = epinet::graph::degree_distribution(&g);
    println!(
        "{}",
        serde_json::json!({
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "max_degree": g.max_degree(),
            "mean_degree": dist.mean_degree(),
            "components": g.connected_components(),
        })
    );
    Ok(())
}

fn ode(a: OdeArgs) -> CliResult<()> {
    let pr = OdeParams::new(a.beta, a.gamma, a.mu)?;
    let (model, st0) = match a.model {
        OdeKind::Sis => (OdeModel::Sis, OdeState::sis(a.i0)),
        OdeKind::Sir => (OdeModel::SirEpidemic, OdeState::sir(a.s0.unwrap_or(1.0 - a.i0), a.i0)),
        OdeKind::SirEndemic => (OdeModel::SirEndemic, OdeState::sir(a.s0.unwrap_or(1.0 - a.i0), a.i0)),
    };
    let traj = integrate(model, st0, &pr, a.dt, a.t_end)?;
    traj.write_csv(create(&a.out)?)?;
    Ok(())
}

fn meanfield(a: MeanfieldArgs) -> CliResult<()> {
    let (g, links, params) = a.node.load()?;
    let opts = RunOptions {
        max_steps: a.steps,
        tol: a.tol,
        bounds: if a.allow_negative_coefficients {
            BoundPolicy::Report
        } else {
            BoundPolicy::Strict
        },
    };
    let res = run(a.node.model.into(), MfState::uniform(g.node_count(), a.p0), &links, &params, &opts)?;
    res.write_csv(create(&a.out)?)?;
    let last = res.last();
    println!(
        "{}",
        serde_json::json!({
            "steps": last.t,
            "converged": res.converged,
            "mean_p": last.mean_p,
            "mean_q": last.mean_q,
            "mean_w": last.mean_w,
            "carriers": last.carriers,
            "bound_violations": res.violations,
        })
    );
    Ok(())
}

fn mc(a: McArgs) -> CliResult<()> {
    let (_, links, params) = a.node.load()?;
    let spec = EnsembleSpec {
        model: a.node.model.into(),
        init_fraction: a.init,
        steps: a.steps,
        runs: a.runs,
        seed: a.seed,
    };
    let res = mc_ensemble(&links, &params, &spec)?;
    res.write_csv(create(&a.out)?)?;
    Ok(())
}

fn spectral(a: SpectralArgs) -> CliResult<()> {
    let g = load_edge_list(&a.graph)?;
    let links = LinkProbs::homogeneous(&g, a.beta)?;
    let params = NodeParams::sis(g.node_count(), a.r, a.delta, a.gamma);
    params.validate(g.node_count(), Model::Sis, false)?;
    let s = survivability_score(&links, &params, &PowerIteration::default(), a.band)?;
    if let Some(path) = &a.vector_out {
        s.spectrum.write_vector_csv(create(path)?)?;
    }
    println!("s={} fast_extinction={}", s.score, s.extinction.label());
    Ok(())
}

fn isolate(a: IsolateArgs) -> CliResult<()> {
    let g = load_edge_list(&a.graph)?;
    let score_params = match &a.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let p: ScoreParams = serde_json::from_str(&text).map_err(|source| CliError::Json {
                path: path.display().to_string(),
                source,
            })?;
            NodeParams::sis(1, p.r, p.delta, p.gamma).validate(1, Model::Sis, false)?;
            if !(0.0..=1.0).contains(&p.beta) {
                return Err(CliError::config("beta", format!("{} is not a probability in [0, 1]", p.beta)));
            }
            Some(p)
        }
        None => None,
    };
    let (after, mut report) = match a.strategy {
        Strategy::Greedy => greedy_edge_removal(&g, a.k)?,
        Strategy::Lattice => rewire_to_lattice(&g)?,
        Strategy::Cycle => match nn_hamiltonian_cycle(&g, a.start)? {
            CycleSearch::Found(cycle) => prune_to_cycle(&g, &cycle)?,
            CycleSearch::Failed { partial, reason } => return Err(CliError::NoHamiltonianCycle { partial, reason }),
        },
    };
    if let Some(p) = &score_params {
        attach_scores(&mut report, &g, &after, p)?;
    }
    save_edge_list(&after, &a.out)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    let config = ExperimentConfig::load(&a.config)?;
    config.validate()?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let out = a.output.unwrap_or_else(|| default_output(&config));
    let res = run_experiment(&config, base, &out)?;
    let failed = res.manifest.points.iter().filter(|p| p.error.is_some()).count();
    println!(
        "{}",
        serde_json::json!({
            "output": out.display().to_string(),
            "config_hash": res.manifest.config_hash,
            "points": res.manifest.points.len(),
            "failed_points": failed,
        })
    );
    Ok(())
}

fn figures(a: FiguresArgs) -> CliResult<()> {
    let summary = reproduce_figures(&a.out)?;
    let mut stdout = std::io::stdout().lock();
    for fig in &summary.figures {
        let verdict = match fig.claim_holds {
            Some(true) => "holds",
            Some(false) => "does not hold",
            None => "reported",
        };
        let _ = writeln!(stdout, "{:<18} {verdict}: {}", fig.name, fig.claim);
    }
    if let Some(t) = &summary.topology {
        let _ = writeln!(
            stdout,
            "{:<18} {}: power-law s={:.6} > lattice s={:.6}",
            "topology",
            if t.claim_holds { "holds" } else { "does not hold" },
            t.powerlaw_score,
            t.lattice_score
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Ode(a) => ode(a),
        Command::Meanfield(a) => meanfield(a),
        Command::Mc(a) => mc(a),
        Command::Spectral(a) => spectral(a),
        Command::Isolate(a) => isolate(a),
        Command::Sweep(a) => sweep(a),
        Command::ReproduceFigures(a) => figures(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
