//! Simulation of quotient and full networks, transverse variational
//! equations and Lyapunov exponents.

pub mod dde;
pub mod mle;
pub mod models;
pub mod phase;
pub mod simulate;
pub mod sweep;
pub mod variational;

pub use mle::{mle, MleEstimate, MleOptions};
pub use models::{CouplingFunction, Models, NodeModel};
pub use phase::{basin_map, phase_lag_curve, BasinPoint, PhaseLabel, PhaseLagPoint};
pub use simulate::{integrate_full, integrate_quotient, lift, SynchronousState, Trajectory};
pub use sweep::{sweep, Param, StabilityProblem, StabilityReport, SweepConfig};
pub use variational::{assemble_variational, VariationalSystem};
