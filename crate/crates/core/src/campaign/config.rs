use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CampaignError;
use crate::bridge::{Endpoint, BUILTIN_NAMES};
use crate::geometry::Bounds;
use crate::mapgen::{MapSpec, MapStyle, TrialConstraints};
use crate::sim::{CameraModel, DroneParams, SimConfig};

/// A whole campaign, parsed from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub master_seed: u64,
    #[serde(default = "default_count")]
    pub maps: usize,
    #[serde(default = "default_count")]
    pub trials_per_map: usize,
    /// Traversability bins in reports.
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses the available parallelism.
    #[serde(default)]
    pub workers: usize,
    /// Largest tolerated fraction of faulted trials per algorithm.
    #[serde(default = "default_fault_threshold")]
    pub fault_threshold: f64,
    /// When false, faulted trials are left out of success-rate denominators.
    #[serde(default = "yes")]
    pub faults_count_as_failures: bool,
    #[serde(default)]
    pub map: MapTemplate,
    #[serde(default)]
    pub drone: DroneParams,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub trial: TrialTemplate,
    #[serde(default)]
    pub sim: SimSettings,
    #[serde(default)]
    pub traversability: TraversabilitySettings,
    #[serde(default)]
    pub path: PathSettings,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<AlgorithmSpec>,
}

fn default_name() -> String {
    "campaign".into()
}
fn default_count() -> usize {
    30
}
fn default_bins() -> usize {
    5
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_fault_threshold() -> f64 {
    0.1
}
fn yes() -> bool {
    true
}
fn default_algorithms() -> Vec<AlgorithmSpec> {
    vec![AlgorithmSpec { name: "straight-line".into(), builtin: Some("straight-line".into()), endpoint: None }]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusSampling {
    /// Independent uniform draw per map.
    #[default]
    Uniform,
    /// Map `i` draws uniformly inside the `i`-th of `maps` equal sub-intervals.
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapTemplate {
    pub width: f64,
    pub height: f64,
    /// Interval the per-map Poisson radius is drawn from, metres.
    pub r_poisson: [f64; 2],
    pub r_sampling: RadiusSampling,
    pub style: MapStyle,
    pub cluster_ratio: f64,
    pub obstacle_radius: [f64; 2],
    pub cluster_radius: [f64; 2],
    pub obstacle_height: [f64; 2],
}

impl Default for MapTemplate {
    fn default() -> Self {
        Self {
            width: 160.0,
            height: 160.0,
            r_poisson: [2.3, 5.8],
            r_sampling: RadiusSampling::Uniform,
            style: MapStyle::IndoorCylinders,
            cluster_ratio: 0.4,
            obstacle_radius: [0.2, 0.5],
            cluster_radius: [0.3, 0.9],
            obstacle_height: [4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialTemplate {
    pub d_lo: f64,
    pub d_hi: f64,
    pub max_time: f64,
    pub goal_tolerance: f64,
    /// Flight altitude, metres.
    pub altitude: f64,
}

impl Default for TrialTemplate {
    fn default() -> Self {
        Self { d_lo: 30.0, d_hi: 60.0, max_time: 90.0, goal_tolerance: 1.0, altitude: 1.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub dt: f64,
    /// Seconds allowed per command.
    pub watchdog: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { dt: 0.01, watchdog: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TraversabilitySettings {
    /// Sample spacing, metres. Defaults to a fortieth of the map width.
    pub grid_spacing: Option<f64>,
    pub directions: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathSettings {
    /// Occupancy grid resolution for the shortest-path oracle. Defaults to a
    /// third of the drone diameter.
    pub cell_size: Option<f64>,
    /// Replacement attempts for a trial whose goal is unreachable.
    pub max_regenerations: usize,
}

impl Default for PathSettings {
    fn default() -> Self {
        Self { cell_size: None, max_regenerations: 20 }
    }
}

/// One algorithm under test: a built-in baseline or an external agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<Endpoint>,
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, CampaignError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = std::fs::read_to_string(path).map_err(|e| CampaignError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, ignoring where results go and how
    /// many workers run.
    pub fn hash(&self) -> String {
        let canonical = Self { output_dir: PathBuf::new(), workers: 0, ..self.clone() };
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::centered(self.map.width, self.map.height)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            goal_tolerance: self.trial.goal_tolerance,
            watchdog: self.sim.watchdog,
            camera: self.camera,
            drone: self.drone,
        }
    }

    pub fn trial_constraints(&self) -> TrialConstraints {
        TrialConstraints {
            d_lo: self.trial.d_lo,
            d_hi: self.trial.d_hi,
            max_time: self.trial.max_time,
            altitude: self.trial.altitude,
            d_drone: self.drone.diameter,
        }
    }

    pub fn map_spec(&self, r_poisson: f64, map_seed: u64) -> MapSpec {
        MapSpec {
            bounds: self.bounds(),
            r_poisson,
            obstacle_radius_range: self.map.obstacle_radius,
            cluster_radius_range: self.map.cluster_radius,
            obstacle_height_range: self.map.obstacle_height,
            style: self.map.style,
            cluster_ratio: if self.map.style == MapStyle::OutdoorClusters { self.map.cluster_ratio } else { 0.0 },
            map_seed,
            d_drone: self.drone.diameter,
        }
    }

    pub fn path_cell_size(&self) -> f64 {
        self.path.cell_size.unwrap_or(self.drone.diameter / 3.0)
    }

    pub fn worker_count(&self) -> usize {
        let n = if self.workers == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { self.workers };
        // A listening endpoint accepts a single agent.
        if self.algorithms.iter().any(|a| matches!(a.endpoint, Some(Endpoint::Listen { .. }))) {
            1
        } else {
            n
        }
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Config(m));
        if self.maps == 0 || self.trials_per_map == 0 {
            return bad("maps and trials_per_map must be at least 1".into());
        }
        if self.maps > 999 || self.trials_per_map > 999 {
            return bad("at most 999 maps and 999 trials per map".into());
        }
        if self.bins < 2 {
            return bad("bins must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.fault_threshold) {
            return bad("fault_threshold must lie in [0, 1]".into());
        }
        let [lo, hi] = self.map.r_poisson;
        if !(lo > 0.0 && hi >= lo) {
            return bad("map.r_poisson must be a positive, ordered interval".into());
        }
        // The narrowest radius bounds the gap size of every map.
        self.map_spec(lo, 0).validate().map_err(|e| CampaignError::Config(format!("map template: {e}")))?;
        self.map_spec(hi, 0).validate().map_err(|e| CampaignError::Config(format!("map template: {e}")))?;
        self.sim_config().validate().map_err(CampaignError::Config)?;
        let t = &self.trial;
        if !(t.d_lo > 0.0 && t.d_hi >= t.d_lo && t.max_time > 0.0 && t.altitude > 0.0) {
            return bad("trial needs 0 < d_lo <= d_hi, positive max_time and altitude".into());
        }
        if t.d_lo > (self.map.width.powi(2) + self.map.height.powi(2)).sqrt() - 2.0 * self.drone.diameter {
            return bad("trial.d_lo does not fit inside the map".into());
        }
        if t.altitude >= self.map.obstacle_height[0] {
            return bad("trial.altitude must be below the shortest obstacle".into());
        }
        if let Some(s) = self.traversability.grid_spacing {
            if !(s > 0.0) {
                return bad("traversability.grid_spacing must be positive".into());
            }
        }
        if self.traversability.directions.is_some_and(|d| d < 4) {
            return bad("traversability.directions must be at least 4".into());
        }
        if !(self.path_cell_size() > 0.0) {
            return bad("path.cell_size must be positive".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for a in &self.algorithms {
            let valid = !a.name.is_empty() && a.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !valid {
                return bad(format!("algorithm name {:?} must be non-empty ASCII letters, digits, '-' or '_'", a.name));
            }
            if !names.insert(&a.name) {
                return bad(format!("duplicate algorithm name {:?}", a.name));
            }
            match (&a.builtin, &a.endpoint) {
                (Some(b), None) if BUILTIN_NAMES.contains(&b.as_str()) => {}
                (Some(b), None) => return bad(format!("unknown built-in algorithm {b:?}; known: {}", BUILTIN_NAMES.join(", "))),
                (None, Some(_)) => {}
                _ => return bad(format!("algorithm {:?} needs exactly one of builtin or endpoint", a.name)),
            }
        }
        Ok(())
    }
}
