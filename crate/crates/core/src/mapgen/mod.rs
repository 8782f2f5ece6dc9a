//! Seeded procedural generation of obstacle fields and trials.

mod map;
mod poisson;
mod trial;

pub use map::{generate_map, MapSpec, MapStyle};
pub use poisson::{poisson_disc_sample, BRIDSON_ATTEMPTS};
pub use trial::{generate_trial, TrialConstraints, TrialSpec, MAX_TRIAL_ATTEMPTS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapGenError {
    #[error("relative gap size below 1 (got {0:.3})")]
    GapBelowOne(f64),
    #[error("invalid map spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible trial constraints after {0} attempts")]
    InfeasibleTrial(usize),
}
