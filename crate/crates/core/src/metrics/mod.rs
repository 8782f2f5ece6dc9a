//! Performance metrics.
//!
//! Per-trial metrics follow the usual conventions: path optimality, energy
//! optimality and average goal velocity only for finished trials, mission
//! progress for every trial. Aggregation helpers bin maps by traversability
//! and compare algorithms through the contrast factor.

mod binning;

pub use binning::{bin_by_traversability, spearman, Binning};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{DroneState, Outcome, TrialRecord};
use crate::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no records")]
    Empty,
    #[error("{0}")]
    Undefined(String),
    #[error("degenerate success rate {0}")]
    DegenerateSuccessRate(f64),
    #[error("at least 2 bins are required, got {0}")]
    TooFewBins(usize),
}

/// `T_finished / T_whole`.
pub fn success_rate<I: IntoIterator<Item = Outcome>>(outcomes: I) -> Result<f64, MetricsError> {
    let (mut finished, mut whole) = (0usize, 0usize);
    for o in outcomes {
        whole += 1;
        finished += (o == Outcome::Finished) as usize;
    }
    if whole == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(finished as f64 / whole as f64)
}

/// Percent excess of travelled distance over the shortest path.
pub fn path_optimality(d_trav: f64, d_min: f64) -> Result<f64, MetricsError> {
    if !(d_min > 0.0) {
        return Err(MetricsError::Undefined(format!("path optimality needs d_min > 0, got {d_min}")));
    }
    Ok((d_trav - d_min) / d_min * 100.0)
}

/// Integral of the jerk norm, m/s².
///
/// Jerk is the forward difference `(a_{k+1} - a_k) / Δt_k` with the actual
/// interval of each pair, so each term of the integral is `‖a_{k+1} - a_k‖`.
pub fn energy_optimality(states: &[DroneState]) -> Result<f64, MetricsError> {
    if states.len() < 3 {
        return Err(MetricsError::Undefined(format!("energy optimality needs 3 samples, got {}", states.len())));
    }
    let mut eo = 0.0;
    for w in states.windows(2) {
        let dt = w[1].t - w[0].t;
        if !(dt > 0.0) {
            return Err(MetricsError::Undefined("timestamps must increase".into()));
        }
        let jerk = (w[1].acceleration - w[0].acceleration) / dt;
        eo += jerk.norm() * dt;
    }
    Ok(eo)
}

/// `d_min / t_trial`, m/s.
pub fn average_goal_velocity(d_min: f64, t_trial: f64) -> Result<f64, MetricsError> {
    if !(t_trial > 0.0) {
        return Err(MetricsError::Undefined(format!("average goal velocity needs t_trial > 0, got {t_trial}")));
    }
    Ok(d_min / t_trial)
}

/// Projection-based progress towards the goal, percent in `[0, 100]`.
///
/// With `a = goal - start`, `b = final - start` and `c = a - b`, the raw value
/// is `(1 - |a·c| / |a|²) · 100`.
pub fn mission_progress(start: Vec3, goal: Vec3, final_position: Vec3) -> Result<f64, MetricsError> {
    let a = goal - start;
    let a2 = a.norm_squared();
    if a2 == 0.0 {
        return Err(MetricsError::Undefined("mission progress needs start != goal".into()));
    }
    let c = a - (final_position - start);
    Ok(((1.0 - a.dot(&c).abs() / a2) * 100.0).clamp(0.0, 100.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessingStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub count: usize,
}

pub fn processing_stats(durations: &[f64]) -> Option<ProcessingStats> {
    let (mean, std) = mean_std(durations)?;
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(ProcessingStats { mean, std, max: sorted[sorted.len() - 1], p95: sorted[rank - 1], count: sorted.len() })
}

/// Mean and population standard deviation, summed in slice order.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Success rate and mean shortest-path length of one algorithm's trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessAtDistance {
    pub sr: f64,
    pub d_min: f64,
    /// Number of trials behind `sr`.
    pub trials: usize,
}

/// `clamp(sr, 1/(2T), 1 - 1/(2T))`.
pub fn clamp_success_rate(sr: f64, trials: usize) -> f64 {
    let h = 1.0 / (2.0 * trials.max(1) as f64);
    sr.clamp(h, 1.0 - h)
}

/// Contrast factor with half-count clamping of both success rates.
///
/// Under `SR = p^d` the factor is `(d_B ln SR_A) / (d_A ln SR_B)`, the ratio
/// of per-metre failure hazards; below 1 means A is safer per metre.
pub fn contrast_factor(a: SuccessAtDistance, b: SuccessAtDistance) -> Result<f64, MetricsError> {
    let a = SuccessAtDistance { sr: clamp_success_rate(a.sr, a.trials), ..a };
    let b = SuccessAtDistance { sr: clamp_success_rate(b.sr, b.trials), ..b };
    contrast_factor_raw(a, b)
}

/// Contrast factor without clamping. Success rates of exactly 0 or 1 are
/// rejected.
pub fn contrast_factor_raw(a: SuccessAtDistance, b: SuccessAtDistance) -> Result<f64, MetricsError> {
    for s in [a.sr, b.sr] {
        if !(s > 0.0 && s < 1.0) {
            return Err(MetricsError::DegenerateSuccessRate(s));
        }
    }
    if !(a.d_min > 0.0 && b.d_min > 0.0) {
        return Err(MetricsError::Undefined("contrast factor needs positive mean d_min".into()));
    }
    Ok((b.d_min * a.sr.ln()) / (a.d_min * b.sr.ln()))
}

/// Metrics of one trial. Absent values are not defined for the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub outcome: Outcome,
    pub po: Option<f64>,
    pub eo: Option<f64>,
    pub agv: Option<f64>,
    pub mp: f64,
    pub d_trav: f64,
    pub d_min: Option<f64>,
    pub t_trial: f64,
}

pub fn trial_metrics(r: &TrialRecord) -> TrialMetrics {
    let finished = r.outcome == Outcome::Finished;
    let d_min = r.d_min.filter(|d| *d > 0.0);
    let po = d_min.filter(|_| finished).and_then(|d| path_optimality(r.d_trav, d).ok());
    let agv = d_min.filter(|_| finished).and_then(|d| average_goal_velocity(d, r.t_trial).ok());
    let eo = if finished { energy_optimality(&r.states).ok() } else { None };
    let mp = mission_progress(r.trial.start, r.trial.goal, r.final_position()).unwrap_or(0.0);
    TrialMetrics { outcome: r.outcome, po, eo, agv, mp, d_trav: r.d_trav, d_min: r.d_min, t_trial: r.t_trial }
}
