//! Deterministic trial execution.
//!
//! The drone is a point mass that tracks a commanded velocity through a
//! first-order lag with hard acceleration and speed limits. The algorithm
//! under test is queried once per camera frame in lock-step: the simulation
//! clock is paused while the algorithm computes, so processing latency is
//! measured but never changes the physics.

mod camera;
mod dynamics;
mod trial;

pub use camera::{camera_yaw, render_depth, CameraModel, DepthImage};
pub use dynamics::{step, DroneParams, DroneState, StepOutcome};
pub use trial::{run_trial, travelled_distance, CommandSample, Outcome, SimConfig, TrialRecord};
