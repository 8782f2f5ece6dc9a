//! Environment difficulty metrics.
//!
//! Traversability is the mean free-flight distance of horizontal rays cast
//! from a regular grid of sample positions, in units of the drone diameter.
//! Sample positions that fall inside an obstacle are skipped. The relative
//! gap size expresses the Poisson spacing minus the mean obstacle width in
//! drone diameters.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Bounds, ObstacleMap, World};
use crate::{Vec2, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid traversability config: {0}")]
    Config(String),
    #[error("map fully blocked: no free sample points")]
    FullyBlocked,
    #[error("traversability {trav} exceeds its obstacle-free maximum {trav_max}")]
    Inconsistent { trav: f64, trav_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversabilityConfig {
    /// Spacing of the sample grid, metres.
    pub grid_spacing: f64,
    /// Number of ray headings per sample, evenly spread over `[0, 2π)`.
    pub directions: usize,
    pub altitude: f64,
    pub d_drone: f64,
}

impl TraversabilityConfig {
    /// Default sampling: spacing of one fortieth of the arena width and 16
    /// headings.
    pub fn for_bounds(bounds: &Bounds, altitude: f64, d_drone: f64) -> Self {
        Self { grid_spacing: bounds.width() / 40.0, directions: 16, altitude, d_drone }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.grid_spacing > 0.0 && self.grid_spacing.is_finite()) {
            return Err(EnvError::Config("grid_spacing must be positive".into()));
        }
        if self.directions < 4 {
            return Err(EnvError::Config("at least 4 directions are required".into()));
        }
        if !(self.d_drone > 0.0) {
            return Err(EnvError::Config("d_drone must be positive".into()));
        }
        Ok(())
    }

    /// Sample positions: cell centres of a `grid_spacing` lattice over the
    /// bounds, row-major from the minimum corner.
    pub fn sample_points(&self, bounds: &Bounds) -> Vec<Vec2> {
        let nx = (bounds.width() / self.grid_spacing + 1e-9).floor().max(1.0) as usize;
        let ny = (bounds.height() / self.grid_spacing + 1e-9).floor().max(1.0) as usize;
        // Centre the lattice when the spacing does not divide the bounds.
        let off = Vec2::new(
            (bounds.width() - nx as f64 * self.grid_spacing) / 2.0,
            (bounds.height() - ny as f64 * self.grid_spacing) / 2.0,
        );
        let mut pts = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                pts.push(
                    bounds.min
                        + off
                        + Vec2::new((i as f64 + 0.5) * self.grid_spacing, (j as f64 + 0.5) * self.grid_spacing),
                );
            }
        }
        pts
    }

    pub fn headings(&self) -> Vec<Vec3> {
        (0..self.directions)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / self.directions as f64;
                Vec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvMetrics {
    pub trav: f64,
    pub trav_max: f64,
    /// Normalised traversability `trav / trav_max`.
    pub p_tau: f64,
    pub rgs: f64,
    /// Sample points kept (outside obstacles).
    pub samples: usize,
}

/// `true` when `p` is strictly inside a cylinder at altitude `z`.
fn inside_obstacle(world: &World, p: Vec2, z: f64) -> bool {
    world.check_collision(Vec3::new(p.x, p.y, z), 0.0).is_some_and(|c| !matches!(c.target, crate::geometry::ContactTarget::Boundary))
}

/// Grid-sampled traversability of `world`.
pub fn traversability(world: &World, cfg: &TraversabilityConfig) -> Result<f64, EnvError> {
    cfg.validate()?;
    let heads = cfg.headings();
    let pts = cfg.sample_points(world.bounds());
    // Large range: rays always end on a wall.
    let range = 2.0 * (world.bounds().width() + world.bounds().height());
    let per_point: Vec<Option<f64>> = pts
        .par_iter()
        .map(|p| {
            if inside_obstacle(world, *p, cfg.altitude) {
                return None;
            }
            let o = Vec3::new(p.x, p.y, cfg.altitude);
            Some(heads.iter().map(|d| world.ray_cast(o, *d, range).expect("sample inside bounds")).sum::<f64>())
        })
        .collect();
    // Fixed-order reduction keeps the result bit-identical across thread counts.
    let mut total = 0.0;
    let mut kept = 0usize;
    for s in per_point.into_iter().flatten() {
        total += s;
        kept += 1;
    }
    if kept == 0 {
        return Err(EnvError::FullyBlocked);
    }
    let rays = (kept * heads.len()) as f64;
    Ok(total / (cfg.d_drone * rays))
}

/// Traversability of the obstacle-free arena with the same sampling.
pub fn trav_max(bounds: &Bounds, cfg: &TraversabilityConfig) -> Result<f64, EnvError> {
    traversability(&World::new(ObstacleMap::empty(*bounds)), cfg)
}

pub fn normalized_traversability(trav: f64, trav_max: f64) -> Result<f64, EnvError> {
    if !(trav_max > 0.0) {
        return Err(EnvError::Config("trav_max must be positive".into()));
    }
    if trav > trav_max * (1.0 + 1e-12) || trav < 0.0 {
        return Err(EnvError::Inconsistent { trav, trav_max });
    }
    Ok((trav / trav_max).min(1.0))
}

pub fn relative_gap_size(r_poisson: f64, mean_width: f64, d_drone: f64) -> f64 {
    (r_poisson - mean_width) / d_drone
}

/// Mean obstacle width of a generated map. Each obstacle group contributes
/// the diameter of the circle around its member centroid that encloses all
/// member discs, which is the plain diameter for a single cylinder.
pub fn mean_obstacle_width(map: &ObstacleMap) -> Option<f64> {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in map.cylinders.iter().enumerate() {
        groups.entry(c.group).or_default().push(i);
    }
    if groups.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for members in groups.values() {
        let n = members.len() as f64;
        let centroid = members.iter().map(|&i| map.cylinders[i].center).sum::<Vec2>() / n;
        let radius = members
            .iter()
            .map(|&i| {
                let c = &map.cylinders[i];
                if members.len() == 1 {
                    c.radius
                } else {
                    (c.center - centroid).norm() + c.radius
                }
            })
            .fold(0.0, f64::max);
        total += 2.0 * radius;
    }
    Some(total / groups.len() as f64)
}

/// All environment metrics of a generated map.
pub fn env_metrics(world: &World, cfg: &TraversabilityConfig, r_poisson: f64) -> Result<EnvMetrics, EnvError> {
    let trav = traversability(world, cfg)?;
    let trav_max = trav_max(world.bounds(), cfg)?;
    let p_tau = normalized_traversability(trav, trav_max)?;
    let width = mean_obstacle_width(world.map()).unwrap_or(0.0);
    let rgs = relative_gap_size(r_poisson, width, cfg.d_drone);
    if rgs < 1.0 {
        tracing::warn!(rgs, "relative gap size below 1");
    }
    let samples = cfg
        .sample_points(world.bounds())
        .iter()
        .filter(|p| !inside_obstacle(world, **p, cfg.altitude))
        .count();
    Ok(EnvMetrics { trav, trav_max, p_tau, rgs, samples })
}
