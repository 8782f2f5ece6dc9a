//! Analytic scene geometry.
//!
//! A scene is a flat ground plane, a rectangular arena in the horizontal
//! plane and a set of vertical cylinders standing on the ground. Everything
//! the benchmark needs from geometry (free-flight distances, depth pixels,
//! drone collisions, the occupancy raster) is computed analytically against
//! this description.

mod grid;
mod index;
mod world;

pub use grid::{coarse_resolution, rasterize_occupancy, OccupancyGrid};
pub use world::World;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Vec2, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("origin ({x}, {y}) lies outside the map bounds")]
    OriginOutsideBounds { x: f64, y: f64 },
    #[error("ray direction must be a finite unit vector, got norm {0}")]
    BadDirection(f64),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("map document: {0}")]
    Document(String),
}

/// Axis-aligned rectangle in the horizontal plane, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    /// `width × height` rectangle centred on the origin.
    pub fn centered(width: f64, height: f64) -> Self {
        Self {
            min: Vec2::new(-width / 2.0, -height / 2.0),
            max: Vec2::new(width / 2.0, height / 2.0),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) / 2.0
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Distance from an interior point to the nearest edge (negative outside).
    pub fn edge_distance(&self, p: Vec2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }

    /// Projection of `p` onto the nearest edge.
    pub fn nearest_edge_point(&self, p: Vec2) -> Vec2 {
        let candidates = [
            (p.x - self.min.x, Vec2::new(self.min.x, p.y)),
            (self.max.x - p.x, Vec2::new(self.max.x, p.y)),
            (p.y - self.min.y, Vec2::new(p.x, self.min.y)),
            (self.max.y - p.y, Vec2::new(p.x, self.max.y)),
        ];
        let mut best = candidates[0];
        for c in &candidates[1..] {
            if c.0 < best.0 {
                best = *c;
            }
        }
        let q = best.1;
        Vec2::new(q.x.clamp(self.min.x, self.max.x), q.y.clamp(self.min.y, self.max.y))
    }

    pub fn is_valid(&self) -> bool {
        self.min.iter().chain(self.max.iter()).all(|v| v.is_finite())
            && self.max.x > self.min.x
            && self.max.y > self.min.y
    }
}

/// Vertical cylinder standing on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: Vec2,
    pub radius: f64,
    pub height: f64,
    /// Obstacle this cylinder belongs to. Single trees have their own group,
    /// the members of an outdoor cluster share one.
    #[serde(default)]
    pub group: u32,
}

impl Cylinder {
    pub fn new(center: Vec2, radius: f64, height: f64) -> Self {
        Self { center, radius, height, group: 0 }
    }
}

/// Complete obstacle scene, fully determined by the map spec and seed that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleMap {
    pub bounds: Bounds,
    pub cylinders: Vec<Cylinder>,
    #[serde(default)]
    pub ground_z: f64,
    #[serde(default)]
    pub map_seed: u64,
}

impl ObstacleMap {
    pub fn empty(bounds: Bounds) -> Self {
        Self { bounds, cylinders: Vec::new(), ground_z: 0.0, map_seed: 0 }
    }

    pub fn with_cylinders(bounds: Bounds, cylinders: Vec<Cylinder>) -> Self {
        Self { bounds, cylinders, ground_z: 0.0, map_seed: 0 }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.bounds.is_valid() {
            return Err(GeometryError::InvalidMap("bounds must be finite with max > min".into()));
        }
        if !self.ground_z.is_finite() {
            return Err(GeometryError::InvalidMap("ground_z must be finite".into()));
        }
        for (i, c) in self.cylinders.iter().enumerate() {
            if !self.bounds.contains(c.center) {
                return Err(GeometryError::InvalidMap(format!("cylinder {i} centre outside bounds")));
            }
            if !(c.radius > 0.0 && c.radius.is_finite()) || !(c.height > 0.0 && c.height.is_finite()) {
                return Err(GeometryError::InvalidMap(format!(
                    "cylinder {i} needs positive finite radius and height"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map serialisation cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let map: Self = serde_json::from_str(text).map_err(|e| GeometryError::Document(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    pub fn min_radius(&self) -> Option<f64> {
        self.cylinders.iter().map(|c| c.radius).reduce(f64::min)
    }

    /// Ray cast by testing every cylinder. Reference path for [`World::ray_cast`].
    pub fn ray_cast_linear(&self, origin: Vec3, dir: Vec3, max_range: f64) -> Result<f64, GeometryError> {
        world::check_ray(&self.bounds, origin, dir)?;
        let mut best = world::static_hit(self, origin, dir, max_range);
        for c in &self.cylinders {
            if let Some(t) = world::ray_cylinder(c, self.ground_z, origin, dir) {
                best = best.min(t);
            }
        }
        Ok(best)
    }
}

/// What a contact touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactTarget {
    Obstacle(usize),
    Boundary,
}

/// A collision between the drone body and the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    /// Point on the contacted surface.
    pub point: Vec3,
    pub target: ContactTarget,
    /// Drone centre when the contact occurred.
    pub drone_position: Vec3,
    /// Position along a swept segment, 0 for point checks.
    pub fraction: f64,
}
