//! Simulation and analysis of virus and information propagation on networks.
//!
//! The crate is organised by concern:
//!
//! * [`graph`]: the four substrate families (binomial, power-law, exponential,
//!   lattice-4 torus), degree statistics and the edge-list file format.
//! * [`continuous`]: the classical SIR/SIS compartment ODEs and a fixed-step
//!   RK4 integrator.
//! * [`meanfield`]: discrete-time mean-field SIS and SIRS (with a Warned
//!   state) dynamics on a graph.
//! * [`spectral`]: the system matrix, power iteration and the survivability
//!   score that decides fast extinction.
//! * [`stochastic`]: agent-based Monte Carlo of the same node state machines.
//! * [`isolation`]: topology modifications that lower the spectral radius.
//!
//! The numerical modules are generic over the floating point type through
//! [`Scalar`]; the aliases below fix the common `f64` (and `f32`) instances.

pub mod continuous;
pub mod error;
pub mod graph;
pub mod isolation;
pub mod meanfield;
pub mod scalar;
pub mod spectral;
pub mod stochastic;

pub use error::{Error, Result};
pub use graph::{DegreeDistribution, Graph, RngSeed};
pub use meanfield::Model;
pub use scalar::Scalar;

pub type OdeParams64 = continuous::OdeParams<f64>;
pub type OdeState64 = continuous::OdeState<f64>;
pub type Trajectory64 = continuous::Trajectory<f64>;
pub type NodeParams64 = meanfield::NodeParams<f64>;
pub type LinkProbs64 = meanfield::LinkProbs<f64>;
pub type MfState64 = meanfield::MfState<f64>;
pub type SystemMatrix64 = spectral::SystemMatrix<f64>;
pub type SpectralResult64 = spectral::SpectralResult<f64>;

pub type OdeParams32 = continuous::OdeParams<f32>;
pub type OdeState32 = continuous::OdeState<f32>;
pub type NodeParams32 = meanfield::NodeParams<f32>;
pub type LinkProbs32 = meanfield::LinkProbs<f32>;
pub type MfState32 = meanfield::MfState<f32>;
pub type SystemMatrix32 = spectral::SystemMatrix<f32>;
