//! Dual variational formulation of a damped, forced particle chain with
//! quadratic interaction forces.
//!
//! The chain `m v' + d v + K(x) - f(t) = 0, x' = v` is recast as the extremum
//! problem of an action in multiplier fields `(gamma, lambda)`. Primal
//! trajectories are recovered pointwise from an extremal through the
//! dual-to-primal map and checked against direct integration.

pub mod chain;
pub mod cli;
pub mod dual;
pub mod error;
pub mod io;
pub mod linalg;
pub mod periodic;
pub mod primal;
pub mod scenario;
pub mod solver;

pub use chain::{fput_alpha, Boundary, ChainParams, ExpandedForce, ForcingSpec, QuadraticForce, Signal, Sinusoid};
pub use dual::{action, dtp_map, ellipticity_check, gradient, hessian, BaseProvenance, BaseState, DualField, ProblemSpec, ScaleParams};
pub use error::{Error, Result};
pub use periodic::{recover_periodic_orbit, solve_periodic, verify_periodic, PeriodicDualSolution, PeriodicSpec};
pub use scenario::{scenario_presets, Mode, Scenario, ScenarioConfig};
pub use primal::{energy_series, integrate_primal, primal_residual, Method, TimeGrid, Trajectory};
pub use solver::{recover_primal, solve_dual, verify, DualSolution, SolveOptions, StepControl, VerificationReport};
