//! Campaign summary, built single-threaded from the results directory.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::CampaignConfig;
use super::store::{rebuild_record, sig9, write_atomic, write_json, MapDocument, Store, TrialDocument};
use super::CampaignError;
use crate::metrics::{bin_by_traversability, contrast_factor, mean_std, processing_stats, spearman, SuccessAtDistance, TrialMetrics};
use crate::sim::Outcome;

/// Mean and population standard deviation over the defined values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
}

impl Stat {
    fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        let ms = mean_std(&v);
        Self { mean: ms.map(|m| m.0), std: ms.map(|m| m.1), count: v.len() }
    }
}

/// Conventions that the numbers in a summary depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub metrics_source: String,
    pub finished_only: String,
    pub mission_progress: String,
    pub success_rate: String,
    pub contrast_factor: String,
    pub shortest_path: String,
    pub traversability: String,
    pub bins: String,
    pub clock: String,
    pub processing_time: String,
}

impl Conventions {
    fn for_config(cfg: &CampaignConfig) -> Self {
        let faults = if cfg.faults_count_as_failures {
            "algorithm faults count as failed trials"
        } else {
            "algorithm faults are excluded from the trial count"
        };
        Self {
            metrics_source: "all metrics are computed from the persisted trajectory tables".into(),
            finished_only: "PO, EO and AGV average finished trials with a reachable goal only".into(),
            mission_progress: "MP uses every trial and is clamped to [0, 100] percent".into(),
            success_rate: format!("SR = finished / trials; {faults}"),
            contrast_factor: "CF(A, B) = (d_B ln SR_A) / (d_A ln SR_B) with SR clamped to [1/(2T), 1 - 1/(2T)] and d the mean d_min of each algorithm".into(),
            shortest_path: format!(
                "d_min is the string-pulled 8-connected A* path on an occupancy grid of {} m cells inflated by half the drone diameter, without corner cutting, less the {} m goal tolerance",
                sig9(cfg.path_cell_size()),
                sig9(cfg.trial.goal_tolerance)
            ),
            traversability: "grid samples inside obstacles are skipped".into(),
            bins: format!("{} equal-width bins over the observed map traversability range", cfg.bins),
            clock: "lock-step simulation; the clock pauses while an algorithm computes".into(),
            processing_time: "wall-clock and machine specific; kept in processing.csv, not in this summary".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub index: usize,
    pub map_seed: u64,
    pub r_poisson: f64,
    pub cylinders: usize,
    pub trav: f64,
    pub trav_max: f64,
    pub p_tau: f64,
    pub rgs: f64,
    pub bin: usize,
    /// Trials whose goal stayed unreachable after all regenerations.
    pub unreachable: usize,
    /// Trial candidates replaced because their goal was unreachable.
    pub replaced: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub index: usize,
    pub trav_lo: f64,
    pub trav_hi: f64,
    pub maps: usize,
    pub trials: usize,
    pub finished: usize,
    pub sr: Option<f64>,
    pub po: Stat,
    pub eo: Stat,
    pub agv: Stat,
    pub mp: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub name: String,
    /// Trials counted towards the success rate.
    pub trials: usize,
    pub finished: usize,
    pub collision: usize,
    pub timeout: usize,
    pub fault: usize,
    pub sr: Option<f64>,
    pub mean_d_min: Option<f64>,
    pub po: Stat,
    pub eo: Stat,
    pub agv: Stat,
    pub mp: Stat,
    pub bins: Vec<BinStats>,
    /// Rank correlation between bin traversability and bin success rate.
    pub spearman_trav_sr: Option<f64>,
    /// Hash of the trial list the algorithm flew; equal across algorithms.
    pub trial_list_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastEntry {
    pub a: String,
    pub b: String,
    pub cf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub maps: usize,
    pub trials_per_map: usize,
    pub conventions: Conventions,
    pub bin_edges: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_warning: Option<String>,
    pub map_summaries: Vec<MapSummary>,
    pub algorithms: Vec<AlgorithmSummary>,
    pub contrast: Vec<ContrastEntry>,
}

/// One persisted run with metrics recomputed from its trajectory.
pub(crate) struct Run {
    pub doc: TrialDocument,
    pub metrics: TrialMetrics,
}

pub(crate) struct Loaded {
    pub cfg: CampaignConfig,
    pub maps: Vec<MapDocument>,
    /// Runs per algorithm in config order, each in map then trial order.
    pub runs: Vec<Vec<Run>>,
}

pub(crate) fn load(dir: &std::path::Path) -> Result<Loaded, CampaignError> {
    let store = Store::new(dir);
    let snapshot = store.config_path();
    if !snapshot.is_file() {
        return Err(CampaignError::Document(format!("{} is not a results directory (no config snapshot)", dir.display())));
    }
    let cfg = CampaignConfig::load(&snapshot)?;
    let maps: Vec<MapDocument> = (0..cfg.maps).map(|m| store.load_map(m)).collect::<Result<_, _>>()?;
    let mut runs = Vec::with_capacity(cfg.algorithms.len());
    for alg in &cfg.algorithms {
        let mut v = Vec::new();
        for m in &maps {
            for t in &m.trials {
                if !store.is_complete(&alg.name, &t.id) {
                    return Err(CampaignError::Document(format!("trial {} of {} has not been run", t.id, alg.name)));
                }
                let doc = store.load_record(&alg.name, &t.id)?;
                let states = store.load_trajectory(&alg.name, &t.id)?;
                let metrics = crate::metrics::trial_metrics(&rebuild_record(&doc, states));
                v.push(Run { doc, metrics });
            }
        }
        runs.push(v);
    }
    Ok(Loaded { cfg, maps, runs })
}

fn counted(cfg: &CampaignConfig, o: Outcome) -> bool {
    cfg.faults_count_as_failures || o != Outcome::Fault
}

fn trial_list_hash(runs: &[Run]) -> String {
    let mut h = Sha256::new();
    for r in runs {
        h.update(serde_json::to_vec(&(&r.doc.id, &r.doc.spec, r.doc.d_min)).expect("serializable"));
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn bin_stats(cfg: &CampaignConfig, index: usize, lo: f64, hi: f64, maps: usize, runs: &[&Run]) -> BinStats {
    let counted: Vec<&&Run> = runs.iter().filter(|r| counted(cfg, r.metrics.outcome)).collect();
    let finished = counted.iter().filter(|r| r.metrics.outcome == Outcome::Finished).count();
    BinStats {
        index,
        trav_lo: lo,
        trav_hi: hi,
        maps,
        trials: counted.len(),
        finished,
        sr: (!counted.is_empty()).then(|| finished as f64 / counted.len() as f64),
        po: Stat::of(runs.iter().map(|r| r.metrics.po)),
        eo: Stat::of(runs.iter().map(|r| r.metrics.eo)),
        agv: Stat::of(runs.iter().map(|r| r.metrics.agv)),
        mp: Stat::of(counted.iter().map(|r| Some(r.metrics.mp))),
    }
}

pub(crate) fn build(loaded: &Loaded) -> Result<Summary, CampaignError> {
    let cfg = &loaded.cfg;
    let travs: Vec<f64> = loaded.maps.iter().map(|m| m.env.trav).collect();
    let binning = bin_by_traversability(&travs, cfg.bins).map_err(|e| CampaignError::Document(format!("binning: {e}")))?;

    let map_summaries = loaded
        .maps
        .iter()
        .zip(&binning.assignment)
        .map(|(m, &bin)| MapSummary {
            index: m.index,
            map_seed: m.spec.map_seed,
            r_poisson: m.spec.r_poisson,
            cylinders: m.map.cylinders.len(),
            trav: m.env.trav,
            trav_max: m.env.trav_max,
            p_tau: m.env.p_tau,
            rgs: m.env.rgs,
            bin,
            unreachable: m.trials.iter().filter(|t| t.d_min.is_none()).count(),
            replaced: m.trials.iter().map(|t| t.replaced_seeds.len()).sum(),
        })
        .collect();

    let mut algorithms = Vec::with_capacity(cfg.algorithms.len());
    for (spec, runs) in cfg.algorithms.iter().zip(&loaded.runs) {
        let count = |o: Outcome| runs.iter().filter(|r| r.metrics.outcome == o).count();
        let counted: Vec<&Run> = runs.iter().filter(|r| counted(cfg, r.metrics.outcome)).collect();
        let finished = count(Outcome::Finished);
        let d_mins: Vec<f64> = counted.iter().filter_map(|r| r.metrics.d_min).collect();
        let bins: Vec<BinStats> = (0..binning.bins())
            .map(|b| {
                let in_bin: Vec<&Run> = runs.iter().filter(|r| binning.assignment[r.doc.map] == b).collect();
                let maps = binning.assignment.iter().filter(|&&x| x == b).count();
                bin_stats(cfg, b, binning.edges[b], binning.edges[b + 1], maps, &in_bin)
            })
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = bins.iter().filter_map(|b| b.sr.map(|sr| (0.5 * (b.trav_lo + b.trav_hi), sr))).unzip();
        algorithms.push(AlgorithmSummary {
            name: spec.name.clone(),
            trials: counted.len(),
            finished,
            collision: count(Outcome::Collision),
            timeout: count(Outcome::Timeout),
            fault: count(Outcome::Fault),
            sr: (!counted.is_empty()).then(|| finished as f64 / counted.len() as f64),
            mean_d_min: mean_std(&d_mins).map(|m| m.0),
            po: Stat::of(runs.iter().map(|r| r.metrics.po)),
            eo: Stat::of(runs.iter().map(|r| r.metrics.eo)),
            agv: Stat::of(runs.iter().map(|r| r.metrics.agv)),
            mp: Stat::of(counted.iter().map(|r| Some(r.metrics.mp))),
            bins,
            spearman_trav_sr: spearman(&x, &y),
            trial_list_sha256: trial_list_hash(runs),
        });
    }

    let mut contrast = Vec::new();
    for a in &algorithms {
        for b in &algorithms {
            let at = |s: &AlgorithmSummary| Some(SuccessAtDistance { sr: s.sr?, d_min: s.mean_d_min?, trials: s.trials });
            let cf = at(a).zip(at(b)).and_then(|(x, y)| contrast_factor(x, y).ok());
            contrast.push(ContrastEntry { a: a.name.clone(), b: b.name.clone(), cf });
        }
    }

    Ok(Summary {
        name: cfg.name.clone(),
        config_sha256: cfg.hash(),
        master_seed: cfg.master_seed,
        maps: cfg.maps,
        trials_per_map: cfg.trials_per_map,
        conventions: Conventions::for_config(cfg),
        bin_edges: binning.edges.clone(),
        bin_warning: binning.warning.clone(),
        map_summaries,
        algorithms,
        contrast,
    })
}

/// Summary of a complete results directory.
pub fn summarize(dir: &std::path::Path) -> Result<Summary, CampaignError> {
    build(&load(dir)?)
}

fn cell(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

/// Writes `summary.json`, `metrics.csv` and `processing.csv`.
pub fn write_summary(dir: &std::path::Path, summary: &Summary) -> Result<(), CampaignError> {
    write_documents(dir, &load(dir)?, summary)
}

/// Builds the summary of `dir` and writes the summary documents.
pub(crate) fn finalize(dir: &std::path::Path) -> Result<Summary, CampaignError> {
    let loaded = load(dir)?;
    let summary = build(&loaded)?;
    write_documents(dir, &loaded, &summary)?;
    Ok(summary)
}

fn write_documents(dir: &std::path::Path, loaded: &Loaded, summary: &Summary) -> Result<(), CampaignError> {
    write_json(&Store::new(dir).summary_path(), summary)?;
    let trav: Vec<f64> = loaded.maps.iter().map(|m| m.env.trav).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "algorithm", "id", "map", "trial", "trav_m", "outcome", "d_min_m", "d_trav_m", "t_trial_s", "po_percent", "eo_m_per_s2", "agv_m_per_s", "mp_percent",
    ];
    w.write_record(header).expect("in-memory write");
    for runs in &loaded.runs {
        for r in runs {
            let m = &r.metrics;
            w.write_record([
                r.doc.algorithm.clone(),
                r.doc.id.clone(),
                r.doc.map.to_string(),
                r.doc.trial.to_string(),
                sig9(trav[r.doc.map]),
                m.outcome.as_str().to_string(),
                cell(m.d_min),
                sig9(m.d_trav),
                sig9(m.t_trial),
                cell(m.po),
                cell(m.eo),
                cell(m.agv),
                sig9(m.mp),
            ])
            .expect("in-memory write");
        }
    }
    write_atomic(&dir.join("metrics.csv"), &w.into_inner().expect("in-memory flush"))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "id", "commands", "mean_s", "std_s", "max_s", "p95_s", "self_reported_mean_s"]).expect("in-memory write");
    for runs in &loaded.runs {
        for r in runs {
            let d: Vec<f64> = r.doc.commands.iter().map(|c| c.processing).collect();
            let own: Vec<f64> = r.doc.commands.iter().filter_map(|c| c.self_reported).collect();
            let s = processing_stats(&d);
            w.write_record([
                r.doc.algorithm.clone(),
                r.doc.id.clone(),
                d.len().to_string(),
                cell(s.map(|s| s.mean)),
                cell(s.map(|s| s.std)),
                cell(s.map(|s| s.max)),
                cell(s.map(|s| s.p95)),
                cell(mean_std(&own).map(|m| m.0)),
            ])
            .expect("in-memory write");
        }
    }
    write_atomic(&dir.join("processing.csv"), &w.into_inner().expect("in-memory flush"))
}

/// Result of recomputing every metric from the persisted trajectories.
#[derive(Debug, Clone)]
pub struct Recomputed {
    pub summary: Summary,
    pub checked: usize,
    /// Trials whose stored metrics differ from the recomputed ones.
    pub mismatches: Vec<String>,
}

/// Recomputes all metrics from disk, compares them with the values stored
/// at run time and rewrites the summary documents.
pub fn recompute_metrics(dir: &std::path::Path) -> Result<Recomputed, CampaignError> {
    let loaded = load(dir)?;
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for r in loaded.runs.iter().flatten() {
        checked += 1;
        if r.metrics != r.doc.metrics {
            mismatches.push(format!("{}/{}", r.doc.algorithm, r.doc.id));
        }
    }
    let summary = build(&loaded)?;
    write_documents(dir, &loaded, &summary)?;
    Ok(Recomputed { summary, checked, mismatches })
}
