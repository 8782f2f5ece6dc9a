//! Headless benchmark for vision-based drone obstacle avoidance.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] holds the analytic scene (vertical cylinders inside a
//!   rectangular arena), ray casting, collision checks and rasterisation.
//! * [`mapgen`] produces seeded obstacle fields and start/goal trials.
//! * [`path`] computes the shortest free path used as the `d_min` reference.
//! * [`env`] quantifies how hard a map is (traversability, relative gap size).
//! * [`sim`] runs one trial: point-mass dynamics, depth rendering, termination.
//! * [`bridge`] is the algorithm interface: in-process plugins, the framed
//!   wire protocol for external agents and the built-in baselines.
//! * [`metrics`] scores trials and aggregates them per traversability bin.
//! * [`campaign`] orchestrates whole campaigns, persistence and reports.

pub mod bridge;
pub mod campaign;
pub mod env;
pub mod geometry;
pub mod mapgen;
pub mod metrics;
pub mod path;
pub mod rng;
pub mod sim;

pub use nalgebra::{Vector2, Vector3};

/// Planar point or vector, metres.
pub type Vec2 = Vector2<f64>;
/// Spatial point or vector, metres (z up).
pub type Vec3 = Vector3<f64>;
