use thiserror::Error;

use crate::model::ConstraintGroup;
use crate::types::{Phase, ProfileShapeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid coefficient: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("no input records")]
    EmptyInput,
    #[error("no efficiency given for phase '{0}'")]
    MissingEfficiency(Phase),
    #[error("record times must be strictly increasing (record {index})")]
    NonMonotonicTime { index: usize },
    #[error("profiles use different timesteps ({0} h vs {1} h)")]
    MismatchedDt(f64, f64),
    #[error("invalid phase durations: {0}")]
    InvalidDurations(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Shape(#[from] ProfileShapeError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("profile has no steps")]
    EmptyProfile,
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("variable index {index} out of range ({count} variables)")]
    VariableOutOfRange { index: usize, count: usize },
    #[error("variable {index} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { index: usize, lower: f64, upper: f64 },
    #[error("row {row} has a non-finite coefficient or right-hand side")]
    NonFinite { row: usize },
    #[error("integer variable {0} must have bounds within [0, 1]")]
    NonBinaryInteger(usize),
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

/// Failure modes of a scenario run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("problem is infeasible; relaxing {} restores feasibility", group_list(.binding))]
    Infeasible { binding: Vec<ConstraintGroup> },
    #[error("problem is unbounded")]
    Unbounded,
    #[error("solver stopped at a limit: {0}")]
    Limit(String),
    #[error("schedule failed verification")]
    VerificationFailed(Box<crate::scenario::VerificationReport>),
    #[error("schedule has {schedule} steps but profile has {profile}")]
    LengthMismatch { schedule: usize, profile: usize },
}

fn group_list(groups: &[ConstraintGroup]) -> String {
    if groups.is_empty() {
        return "no single constraint group".into();
    }
    groups
        .iter()
        .map(|g| g.label().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}
