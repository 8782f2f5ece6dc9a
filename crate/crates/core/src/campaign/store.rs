//! Results directory layout.
//!
//! ```text
//! <dir>/config.toml                 campaign config snapshot
//! <dir>/maps/map_000.json           map, environment metrics, trial plan
//! <dir>/trials/<algo>/m000_t000.csv trajectory
//! <dir>/trials/<algo>/m000_t000.json outcome, timings, metrics
//! <dir>/summary.json                deterministic campaign summary
//! <dir>/metrics.csv                 one row per trial
//! <dir>/processing.csv              command timings (machine specific)
//! <dir>/report/                     tables and plots
//! ```
//!
//! The trajectory table is the source of truth for every metric: metrics
//! are always computed from the parsed table, so values computed while a
//! campaign runs equal values recomputed later from disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CampaignError;
use crate::env::{EnvMetrics, TraversabilityConfig};
use crate::geometry::{Contact, ObstacleMap};
use crate::mapgen::{MapSpec, TrialSpec};
use crate::metrics::TrialMetrics;
use crate::sim::{travelled_distance, CommandSample, DroneState, Outcome, TrialRecord};
use crate::Vec3;

pub const TRAJECTORY_HEADER: [&str; 10] = ["t", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az"];

/// Formats `x` with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..9).contains(&exp) {
        format!("{x:.*}", (8 - exp).max(0) as usize)
    } else {
        sci
    }
}

pub fn trial_id(map: usize, trial: usize) -> String {
    format!("m{map:03}_t{trial:03}")
}

/// A trial as planned for every algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrial {
    pub index: usize,
    pub id: String,
    pub spec: TrialSpec,
    /// Shortest free path; absent when no regeneration found a reachable goal.
    pub d_min: Option<f64>,
    /// Seeds of earlier candidates whose goal was unreachable.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replaced_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub index: usize,
    pub spec: MapSpec,
    pub env: EnvMetrics,
    pub traversability: TraversabilityConfig,
    /// Occupancy grid resolution used for `d_min`, metres.
    pub path_cell_size: f64,
    pub trials: Vec<PlannedTrial>,
    pub map: ObstacleMap,
}

/// Everything about one run except the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDocument {
    pub algorithm: String,
    pub map: usize,
    pub trial: usize,
    pub id: String,
    pub outcome: Outcome,
    pub spec: TrialSpec,
    pub d_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<Contact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
    pub commands: Vec<CommandSample>,
    pub metrics: TrialMetrics,
}

#[derive(Debug, Clone)]
pub struct Store {
    pub root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn map_path(&self, map: usize) -> PathBuf {
        self.root.join("maps").join(format!("map_{map:03}.json"))
    }

    pub fn trial_dir(&self, algorithm: &str) -> PathBuf {
        self.root.join("trials").join(algorithm)
    }

    pub fn trajectory_path(&self, algorithm: &str, id: &str) -> PathBuf {
        self.trial_dir(algorithm).join(format!("{id}.csv"))
    }

    pub fn record_path(&self, algorithm: &str, id: &str) -> PathBuf {
        self.trial_dir(algorithm).join(format!("{id}.json"))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.root.join("summary.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    /// A trial is complete once its record exists; the record is written
    /// after the trajectory.
    pub fn is_complete(&self, algorithm: &str, id: &str) -> bool {
        self.record_path(algorithm, id).is_file() && self.trajectory_path(algorithm, id).is_file()
    }

    pub fn load_map(&self, map: usize) -> Result<MapDocument, CampaignError> {
        read_json(&self.map_path(map))
    }

    pub fn load_record(&self, algorithm: &str, id: &str) -> Result<TrialDocument, CampaignError> {
        read_json(&self.record_path(algorithm, id))
    }

    pub fn load_trajectory(&self, algorithm: &str, id: &str) -> Result<Vec<DroneState>, CampaignError> {
        let path = self.trajectory_path(algorithm, id);
        let text = fs::read_to_string(&path).map_err(|e| CampaignError::io(&path, e))?;
        parse_trajectory(&text).map_err(|e| CampaignError::Document(format!("{}: {e}", path.display())))
    }

    /// Writes trajectory and record of a finished run.
    pub fn save_trial(&self, traj_csv: &str, doc: &TrialDocument) -> Result<(), CampaignError> {
        write_atomic(&self.trajectory_path(&doc.algorithm, &doc.id), traj_csv.as_bytes())?;
        write_json(&self.record_path(&doc.algorithm, &doc.id), doc)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CampaignError> {
    let dir = path.parent().expect("store paths have a parent");
    fs::create_dir_all(dir).map_err(|e| CampaignError::io(dir, e))?;
    let tmp = path.with_extension(format!("{}.partial", path.extension().and_then(|e| e.to_str()).unwrap_or("tmp")));
    let mut f = fs::File::create(&tmp).map_err(|e| CampaignError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CampaignError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CampaignError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CampaignError> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CampaignError> {
    let text = fs::read_to_string(path).map_err(|e| CampaignError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CampaignError::Document(format!("{}: {e}", path.display())))
}

pub fn trajectory_csv(states: &[DroneState]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_HEADER).expect("in-memory write");
    for s in states {
        let row = [s.t, s.position.x, s.position.y, s.position.z, s.velocity.x, s.velocity.y, s.velocity.z, s.acceleration.x, s.acceleration.y, s.acceleration.z];
        w.write_record(row.iter().map(|v| sig9(*v))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn parse_trajectory(text: &str) -> Result<Vec<DroneState>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(format!("unexpected trajectory header {header:?}"));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| e.to_string())?;
        let v: Vec<f64> = row.iter().map(|c| c.parse::<f64>().map_err(|e| format!("{c:?}: {e}"))).collect::<Result<_, _>>()?;
        if v.len() != 10 {
            return Err(format!("trajectory row with {} columns", v.len()));
        }
        out.push(DroneState {
            t: v[0],
            position: Vec3::new(v[1], v[2], v[3]),
            velocity: Vec3::new(v[4], v[5], v[6]),
            acceleration: Vec3::new(v[7], v[8], v[9]),
        });
    }
    Ok(out)
}

/// Replaces the states of `rec` with `states` and rederives the quantities
/// that depend on them.
pub fn adopt_states(rec: &mut TrialRecord, states: Vec<DroneState>) {
    rec.t_trial = states.last().map_or(0.0, |s| s.t);
    rec.d_trav = travelled_distance(&states);
    rec.states = states;
}

/// Trial record rebuilt from its persisted parts.
pub fn rebuild_record(doc: &TrialDocument, states: Vec<DroneState>) -> TrialRecord {
    let mut rec = TrialRecord {
        outcome: doc.outcome,
        states: Vec::new(),
        commands: doc.commands.clone(),
        t_trial: 0.0,
        d_trav: 0.0,
        d_min: doc.d_min,
        trial: doc.spec,
        contact: doc.contact,
        fault: doc.fault.clone(),
    };
    adopt_states(&mut rec, states);
    rec
}
