//! Experiment harness around `epinet`: JSON configs, parameter sweeps with
//! manifests, and a bundled set of figure configs with checked claims.

pub mod config;
pub mod error;
pub mod experiment;
pub mod figures;

pub use config::{ExperimentConfig, GraphSpec, ModelKind, ParamBlock, RunSpec, SweepSpec};
pub use error::{CliError, CliResult, ErrorBody};
pub use experiment::{run_experiment, Manifest, PointOutput, PointRecord, SweepResult};
pub use figures::{reproduce_figures, Summary};
