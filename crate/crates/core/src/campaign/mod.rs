//! Campaign orchestration.
//!
//! A campaign generates its maps and trials from the master seed, runs
//! every trial for every algorithm on a bounded worker pool, persists each
//! run as soon as it ends, and summarizes from what is on disk. Rerunning
//! with the same config skips completed runs.

mod config;
mod report;
mod store;
mod summary;
mod svg;

pub use config::{AlgorithmSpec, CampaignConfig, MapTemplate, PathSettings, RadiusSampling, SimSettings, TrialTemplate, TraversabilitySettings};
pub use report::{emit_report, ReportFiles};
pub use store::{parse_trajectory, rebuild_record, sig9, trajectory_csv, trial_id, MapDocument, PlannedTrial, Store, TrialDocument};
pub use summary::{recompute_metrics, summarize, write_summary, AlgorithmSummary, BinStats, ContrastEntry, Conventions, MapSummary, Recomputed, Stat, Summary};

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bridge::{builtin, Algorithm, ExternalAlgorithm};
use crate::env::{env_metrics, TraversabilityConfig};
use crate::geometry::{rasterize_occupancy, OccupancyGrid, World};
use crate::mapgen::{generate_map, generate_trial};
use crate::metrics::trial_metrics;
use crate::path::shortest_flyable_path;
use crate::rng::{mix_seed, stream_rng, Stream};
use crate::sim::{run_trial, Outcome, TrialRecord};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Document(String),
    #[error("map {map}: {message}")]
    Map { map: usize, message: String },
}

impl CampaignError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

/// Counters a caller can poll while a campaign runs.
#[derive(Debug, Default)]
pub struct Progress {
    pub total: AtomicUsize,
    pub done: AtomicUsize,
    pub skipped: AtomicUsize,
}

impl Progress {
    pub fn snapshot(&self) -> (usize, usize) {
        (self.done.load(Ordering::Relaxed), self.total.load(Ordering::Relaxed))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub dir: PathBuf,
    /// Trials executed in this invocation; the rest were already on disk.
    pub executed: usize,
    /// Algorithms whose fault fraction exceeded the configured threshold.
    pub over_fault_threshold: Vec<String>,
}

/// Per-map Poisson radii and seeds, drawn from the campaign stream.
pub fn map_draws(cfg: &CampaignConfig) -> Vec<(u64, f64)> {
    let mut rng = stream_rng(cfg.master_seed, Stream::Campaign);
    let [lo, hi] = cfg.map.r_poisson;
    (0..cfg.maps)
        .map(|i| {
            let seed: u64 = rng.gen();
            let u: f64 = rng.gen();
            let r = match cfg.map.r_sampling {
                RadiusSampling::Uniform => lo + u * (hi - lo),
                RadiusSampling::Stratified => lo + (i as f64 + u) / cfg.maps as f64 * (hi - lo),
            };
            (seed, r.min(hi))
        })
        .collect()
}

fn traversability_config(cfg: &CampaignConfig) -> TraversabilityConfig {
    let mut t = TraversabilityConfig::for_bounds(&cfg.bounds(), cfg.trial.altitude, cfg.drone.diameter);
    if let Some(s) = cfg.traversability.grid_spacing {
        t.grid_spacing = s;
    }
    if let Some(d) = cfg.traversability.directions {
        t.directions = d;
    }
    t
}

/// Shortest free distance from the start to the arrival disc around the goal.
fn d_min(world: &World, grid: &OccupancyGrid, spec: &crate::mapgen::TrialSpec, cfg: &CampaignConfig) -> Option<f64> {
    shortest_flyable_path(world, grid, spec.start.xy(), spec.goal.xy(), cfg.drone.diameter, cfg.trial.altitude)
        .ok()
        .map(|p| (p.d_min - cfg.trial.goal_tolerance).max(0.0))
}

/// Generates map `index`, its environment metrics and its trial plan.
pub fn plan_map(cfg: &CampaignConfig, index: usize, map_seed: u64, r_poisson: f64) -> Result<MapDocument, CampaignError> {
    let err = |message: String| CampaignError::Map { map: index, message };
    let spec = cfg.map_spec(r_poisson, map_seed);
    let map = generate_map(&spec).map_err(|e| err(e.to_string()))?;
    let world = World::new(map);
    let tcfg = traversability_config(cfg);
    let env = env_metrics(&world, &tcfg, r_poisson).map_err(|e| err(e.to_string()))?;
    let cell = cfg.path_cell_size();
    let grid = rasterize_occupancy(&world, cell, cfg.drone.diameter, cfg.trial.altitude);
    let constraints = cfg.trial_constraints();

    let mut trials = Vec::with_capacity(cfg.trials_per_map);
    for j in 0..cfg.trials_per_map {
        let mut seed = mix_seed(map_seed, j as u64);
        let mut replaced = Vec::new();
        let (spec, d) = loop {
            let t = generate_trial(&world, seed, &constraints).map_err(|e| err(format!("trial {j}: {e}")))?;
            match d_min(&world, &grid, &t, cfg) {
                Some(d) => break (t, Some(d)),
                None if replaced.len() < cfg.path.max_regenerations => {
                    tracing::info!(map = index, trial = j, seed, "goal unreachable, regenerating trial");
                    replaced.push(seed);
                    seed = mix_seed(seed, replaced.len() as u64);
                }
                None => {
                    tracing::warn!(map = index, trial = j, "goal unreachable after all regenerations");
                    break (t, None);
                }
            }
        };
        trials.push(PlannedTrial { index: j, id: trial_id(index, j), spec, d_min: d, replaced_seeds: replaced });
    }
    Ok(MapDocument { index, spec, env, traversability: tcfg, path_cell_size: cell, trials, map: world.into_map() })
}

fn instantiate(spec: &AlgorithmSpec, watchdog: f64) -> Result<Box<dyn Algorithm>, String> {
    if let Some(b) = &spec.builtin {
        return builtin(b).map_err(|e| e.to_string());
    }
    let endpoint = spec.endpoint.as_ref().expect("validated");
    ExternalAlgorithm::connect(endpoint, Duration::from_secs_f64(watchdog))
        .map(|a| Box::new(a) as Box<dyn Algorithm>)
        .map_err(|e| e.to_string())
}

/// Persists one run. Metrics are taken from the formatted trajectory, the
/// same values a later recomputation from disk sees.
fn persist(store: &Store, algorithm: &str, map: usize, planned: &PlannedTrial, mut rec: TrialRecord) -> Result<(), CampaignError> {
    rec.d_min = planned.d_min;
    let text = trajectory_csv(&rec.states);
    let states = parse_trajectory(&text).map_err(CampaignError::Document)?;
    store::adopt_states(&mut rec, states);
    let doc = TrialDocument {
        algorithm: algorithm.to_string(),
        map,
        trial: planned.index,
        id: planned.id.clone(),
        outcome: rec.outcome,
        spec: planned.spec,
        d_min: planned.d_min,
        contact: rec.contact,
        metrics: trial_metrics(&rec),
        fault: rec.fault,
        commands: rec.commands,
    };
    store.save_trial(&text, &doc)
}

fn faulted(spec: &crate::mapgen::TrialSpec, reason: String) -> TrialRecord {
    TrialRecord {
        outcome: Outcome::Fault,
        states: vec![crate::sim::DroneState::at_rest(spec.start)],
        commands: Vec::new(),
        t_trial: 0.0,
        d_trav: 0.0,
        d_min: None,
        trial: *spec,
        contact: None,
        fault: Some(reason),
    }
}

/// Checks that `cfg` is valid and that its output directory is empty or
/// holds results of the same campaign.
pub fn preflight(cfg: &CampaignConfig) -> Result<(), CampaignError> {
    cfg.validate()?;
    let snapshot = Store::new(&cfg.output_dir).config_path();
    if snapshot.is_file() {
        let previous = CampaignConfig::load(&snapshot)?;
        if previous.hash() != cfg.hash() {
            return Err(CampaignError::Config(format!(
                "{} holds results of a different campaign; choose another output directory",
                cfg.output_dir.display()
            )));
        }
    }
    Ok(())
}

/// Runs (or resumes) a campaign into `cfg.output_dir`.
pub fn run_campaign(cfg: &CampaignConfig, progress: &Progress) -> Result<RunOutcome, CampaignError> {
    preflight(cfg)?;
    let store = Store::new(&cfg.output_dir);
    store::write_atomic(&store.config_path(), cfg.to_toml().as_bytes())?;

    let draws = map_draws(cfg);
    let maps: Vec<MapDocument> = draws
        .par_iter()
        .enumerate()
        .map(|(i, &(seed, r))| plan_map(cfg, i, seed, r))
        .collect::<Result<_, _>>()?;
    for m in &maps {
        store::write_json(&store.map_path(m.index), m)?;
    }
    let worlds: Vec<World> = maps.iter().map(|m| World::new(m.map.clone())).collect();

    let mut jobs = Vec::new();
    for (a, alg) in cfg.algorithms.iter().enumerate() {
        for m in &maps {
            for t in &m.trials {
                if store.is_complete(&alg.name, &t.id) {
                    progress.skipped.fetch_add(1, Ordering::Relaxed);
                } else {
                    jobs.push((a, m.index, t.index));
                }
            }
        }
    }
    progress.total.store(jobs.len(), Ordering::Relaxed);
    progress.done.store(0, Ordering::Relaxed);

    let sim = cfg.sim_config();
    let next = AtomicUsize::new(0);
    let workers = cfg.worker_count().min(jobs.len()).max(1);
    let failure: std::sync::Mutex<Option<CampaignError>> = std::sync::Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut instances: Vec<Option<Result<Box<dyn Algorithm>, String>>> = (0..cfg.algorithms.len()).map(|_| None).collect();
                loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= jobs.len() || failure.lock().unwrap().is_some() {
                        break;
                    }
                    let (a, m, t) = jobs[k];
                    let spec = &cfg.algorithms[a];
                    let planned = &maps[m].trials[t];
                    let slot = instances[a].get_or_insert_with(|| instantiate(spec, cfg.sim.watchdog));
                    let rec = match slot {
                        Ok(alg) => run_trial(&worlds[m], &planned.spec, &planned.id, alg.as_mut(), &sim),
                        Err(e) => faulted(&planned.spec, format!("could not start algorithm: {e}")),
                    };
                    if let Err(e) = persist(&store, &spec.name, m, planned, rec) {
                        failure.lock().unwrap().get_or_insert(e);
                        break;
                    }
                    progress.done.fetch_add(1, Ordering::Relaxed);
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }

    let summary = summary::finalize(&store.root)?;
    let over = summary
        .algorithms
        .iter()
        .filter(|a| a.trials > 0 && a.fault as f64 / a.trials as f64 > cfg.fault_threshold)
        .map(|a| a.name.clone())
        .collect();
    Ok(RunOutcome { summary, dir: store.root.clone(), executed: jobs.len(), over_fault_threshold: over })
}
