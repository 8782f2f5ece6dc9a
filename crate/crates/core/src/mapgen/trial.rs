use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MapGenError;
use crate::geometry::World;
use crate::rng::{stream_rng, Stream};
use crate::Vec3;

/// Start/goal rejection attempts before a trial is declared infeasible.
pub const MAX_TRIAL_ATTEMPTS: usize = 10_000;

/// One start → goal task on a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub start: Vec3,
    pub goal: Vec3,
    /// Time limit, seconds.
    pub max_time: f64,
    pub trial_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConstraints {
    /// Minimum straight-line start–goal distance, metres.
    pub d_lo: f64,
    pub d_hi: f64,
    pub max_time: f64,
    pub altitude: f64,
    pub d_drone: f64,
}

/// Rejection-samples a collision-free start and goal at flight altitude.
///
/// Both endpoints keep at least `d_drone` between the drone centre and any
/// obstacle surface or wall. The goal is placed at a uniformly drawn heading
/// and distance in `[d_lo, d_hi]` from the start.
pub fn generate_trial(world: &World, trial_seed: u64, c: &TrialConstraints) -> Result<TrialSpec, MapGenError> {
    if !(c.d_lo >= 0.0 && c.d_hi >= c.d_lo && c.max_time > 0.0 && c.d_drone > 0.0) {
        return Err(MapGenError::InvalidSpec("trial constraints need 0 <= d_lo <= d_hi, positive time and drone size".into()));
    }
    let mut rng = stream_rng(trial_seed, Stream::Trial);
    let b = world.bounds();
    let margin = c.d_drone;
    if b.width() <= 2.0 * margin || b.height() <= 2.0 * margin {
        return Err(MapGenError::InfeasibleTrial(0));
    }
    let clear = |p: Vec3| world.check_collision(p, 2.0 * c.d_drone).is_none();

    for _ in 0..MAX_TRIAL_ATTEMPTS {
        let start = Vec3::new(
            rng.gen_range(b.min.x + margin..b.max.x - margin),
            rng.gen_range(b.min.y + margin..b.max.y - margin),
            c.altitude,
        );
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let dist = if c.d_hi > c.d_lo { rng.gen_range(c.d_lo..c.d_hi) } else { c.d_lo };
        let goal = start + Vec3::new(dist * theta.cos(), dist * theta.sin(), 0.0);
        if !b.contains(goal.xy()) || !clear(start) || !clear(goal) {
            continue;
        }
        return Ok(TrialSpec { start, goal, max_time: c.max_time, trial_seed });
    }
    Err(MapGenError::InfeasibleTrial(MAX_TRIAL_ATTEMPTS))
}
