use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{poisson_disc_sample, MapGenError};
use crate::geometry::{Bounds, Cylinder, ObstacleMap};
use crate::rng::{stream_rng, Stream};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapStyle {
    /// One cylinder per Poisson site.
    IndoorCylinders,
    /// Sites become either a single tree or a bush made of 3–7 overlapping
    /// cylinders.
    OutdoorClusters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub bounds: Bounds,
    pub r_poisson: f64,
    /// Radius range of single cylinders (indoor obstacles, outdoor trees).
    pub obstacle_radius_range: [f64; 2],
    /// Radius range of the cylinders that make up an outdoor cluster.
    #[serde(default = "default_cluster_radius")]
    pub cluster_radius_range: [f64; 2],
    #[serde(default = "default_height")]
    pub obstacle_height_range: [f64; 2],
    pub style: MapStyle,
    /// Fraction of outdoor sites that become clusters.
    #[serde(default)]
    pub cluster_ratio: f64,
    pub map_seed: u64,
    pub d_drone: f64,
}

fn default_cluster_radius() -> [f64; 2] {
    [0.3, 0.9]
}

fn default_height() -> [f64; 2] {
    [4.0, 8.0]
}

impl MapSpec {
    /// Indoor spec with the default radius range `[0.2, 0.5]` m.
    pub fn indoor(bounds: Bounds, r_poisson: f64, map_seed: u64, d_drone: f64) -> Self {
        Self {
            bounds,
            r_poisson,
            obstacle_radius_range: [0.2, 0.5],
            cluster_radius_range: default_cluster_radius(),
            obstacle_height_range: default_height(),
            style: MapStyle::IndoorCylinders,
            cluster_ratio: 0.0,
            map_seed,
            d_drone,
        }
    }

    pub fn outdoor(bounds: Bounds, r_poisson: f64, cluster_ratio: f64, map_seed: u64, d_drone: f64) -> Self {
        Self { style: MapStyle::OutdoorClusters, cluster_ratio, ..Self::indoor(bounds, r_poisson, map_seed, d_drone) }
    }

    /// Mean obstacle width implied by the single-cylinder radius range.
    pub fn nominal_obstacle_width(&self) -> f64 {
        self.obstacle_radius_range[0] + self.obstacle_radius_range[1]
    }

    /// Relative gap size implied by the spec alone.
    pub fn nominal_gap_size(&self) -> f64 {
        (self.r_poisson - self.nominal_obstacle_width()) / self.d_drone
    }

    pub fn validate(&self) -> Result<(), MapGenError> {
        let bad = |m: &str| Err(MapGenError::InvalidSpec(m.to_string()));
        if !self.bounds.is_valid() {
            return bad("bounds must be finite with max > min");
        }
        if !(self.r_poisson > 0.0 && self.r_poisson.is_finite()) {
            return bad("r_poisson must be positive");
        }
        if !(self.d_drone > 0.0 && self.d_drone.is_finite()) {
            return bad("d_drone must be positive");
        }
        for (name, [lo, hi]) in [
            ("obstacle_radius_range", self.obstacle_radius_range),
            ("cluster_radius_range", self.cluster_radius_range),
            ("obstacle_height_range", self.obstacle_height_range),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return bad(&format!("{name} must be positive and ordered"));
            }
        }
        if !(0.0..=1.0).contains(&self.cluster_ratio) {
            return bad("cluster_ratio must lie in [0, 1]");
        }
        let rgs = self.nominal_gap_size();
        if rgs < 1.0 {
            return Err(MapGenError::GapBelowOne(rgs));
        }
        Ok(())
    }
}

/// Builds the obstacle map for `spec`: one obstacle per Poisson site.
///
/// Sites come from [`poisson_disc_sample`] with the map seed; radii,
/// heights and cluster layouts are drawn from a separate stream of the same
/// seed, so the site layout does not depend on the style.
pub fn generate_map(spec: &MapSpec) -> Result<ObstacleMap, MapGenError> {
    spec.validate()?;
    let sites = poisson_disc_sample(&spec.bounds, spec.r_poisson, spec.map_seed);
    let mut rng = stream_rng(spec.map_seed, Stream::Obstacles);
    let b = spec.bounds;
    let uniform = |rng: &mut rand_chacha::ChaCha8Rng, [lo, hi]: [f64; 2]| {
        if hi > lo {
            rng.gen_range(lo..hi)
        } else {
            lo
        }
    };

    let mut cylinders = Vec::with_capacity(sites.len());
    for (site_id, site) in sites.iter().enumerate() {
        let group = site_id as u32;
        let cluster = spec.style == MapStyle::OutdoorClusters && rng.gen::<f64>() < spec.cluster_ratio;
        if cluster {
            let members = rng.gen_range(3..=7);
            let spread = spec.r_poisson / 4.0;
            for _ in 0..members {
                let rho = spread * rng.gen::<f64>().sqrt();
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                let c = site + Vec2::new(rho * theta.cos(), rho * theta.sin());
                let center = Vec2::new(c.x.clamp(b.min.x, b.max.x), c.y.clamp(b.min.y, b.max.y));
                let radius = uniform(&mut rng, spec.cluster_radius_range);
                let height = uniform(&mut rng, spec.obstacle_height_range);
                cylinders.push(Cylinder { center, radius, height, group });
            }
        } else {
            let radius = uniform(&mut rng, spec.obstacle_radius_range);
            let height = uniform(&mut rng, spec.obstacle_height_range);
            cylinders.push(Cylinder { center: *site, radius, height, group });
        }
    }
    Ok(ObstacleMap { bounds: b, cylinders, ground_z: 0.0, map_seed: spec.map_seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn groups(map: &ObstacleMap) -> BTreeMap<u32, usize> {
        let mut g = BTreeMap::new();
        for c in &map.cylinders {
            *g.entry(c.group).or_insert(0) += 1;
        }
        g
    }

    #[test]
    fn indoor_has_one_cylinder_per_site() {
        let spec = MapSpec::indoor(Bounds::centered(60.0, 60.0), 3.0, 11, 0.6);
        let map = generate_map(&spec).unwrap();
        let sites = poisson_disc_sample(&spec.bounds, 3.0, 11);
        assert_eq!(map.cylinders.len(), sites.len());
        assert!(map.cylinders.iter().all(|c| (0.2..0.5).contains(&c.radius) && c.height > 1.5));
        map.validate().unwrap();
    }

    #[test]
    fn outdoor_cluster_fraction_is_binomial() {
        let spec = MapSpec::outdoor(Bounds::centered(160.0, 160.0), 4.0, 0.4, 3, 0.6);
        let map = generate_map(&spec).unwrap();
        let g = groups(&map);
        let n = g.len() as f64;
        let clusters = g.values().filter(|k| **k > 1).count() as f64;
        let frac = clusters / n;
        // Four standard deviations of a Binomial(n, 0.4) proportion.
        let sd = (0.4 * 0.6 / n).sqrt();
        assert!((frac - 0.4).abs() < 4.0 * sd, "fraction {frac} over {n} sites");
        assert!(g.values().all(|k| *k == 1 || (3..=7).contains(k)));
        map.validate().unwrap();
    }

    #[test]
    fn gap_below_one_is_rejected() {
        let mut spec = MapSpec::indoor(Bounds::centered(40.0, 40.0), 3.0, 1, 0.6);
        spec.r_poisson = spec.nominal_obstacle_width() + 0.5 * spec.d_drone;
        let err = generate_map(&spec).unwrap_err();
        assert!(err.to_string().contains("relative gap size below 1"));
    }

    #[test]
    fn map_is_pure_function_of_spec() {
        let spec = MapSpec::outdoor(Bounds::centered(50.0, 50.0), 2.3, 0.4, 99, 0.6);
        let a = generate_map(&spec).unwrap().to_json();
        let b = generate_map(&spec).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_specs() {
        let mut spec = MapSpec::indoor(Bounds::centered(40.0, 40.0), 3.0, 1, 0.6);
        spec.obstacle_radius_range = [0.5, 0.2];
        assert!(matches!(generate_map(&spec), Err(MapGenError::InvalidSpec(_))));
        let mut spec = MapSpec::indoor(Bounds::centered(40.0, 40.0), 3.0, 1, 0.6);
        spec.cluster_ratio = 1.5;
        assert!(matches!(generate_map(&spec), Err(MapGenError::InvalidSpec(_))));
    }
}
