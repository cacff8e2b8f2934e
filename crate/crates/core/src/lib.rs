//! Sizing and dispatch optimisation for a hydrogen fuel-cell / Li-ion /
//! Al-air hybrid regional-aircraft powertrain.
//!
//! The pipeline is: obtain a [`FlightProfile`] ([`profile`]), build the
//! time-indexed mixed-integer model ([`model`]), solve it with the in-repo
//! simplex and branch-and-bound engine ([`solver`]), then replay the
//! decoded [`Schedule`] through an independent verifier ([`scenario`]).

pub mod cli;
pub mod error;
pub mod io;
pub mod lp;
pub mod model;
pub mod profile;
pub mod scenario;
pub mod solver;
pub mod types;

pub use error::{ConfigError, LpError, ModelError, ProfileError, ScenarioError};
pub use lp::{Constraint, LpProblem, Relation};
pub use model::{build_milp, ConstraintGroup, PowertrainModel, RampMode, ScenarioMode, ScenarioSpec};
pub use scenario::{verify_schedule, ExperimentConfig, ExperimentResult, VerificationReport, VerifyOptions};
pub use solver::{solve_lp, solve_mip, MipSolution, SolverConfig, Status};
pub use types::{CoefficientSet, FlightProfile, Phase, Schedule, Sizing};
