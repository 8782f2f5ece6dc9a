use super::{Algorithm, BridgeError, Command, Handshake, Observation, TrialStart};
use crate::Vec3;

pub const BUILTIN_NAMES: [&str; 3] = ["straight-line", "hover", "reactive"];

/// Instantiates a built-in baseline by name.
pub fn builtin(name: &str) -> Result<Box<dyn Algorithm>, BridgeError> {
    match name {
        "straight-line" => Ok(Box::new(StraightLine::default())),
        "hover" => Ok(Box::new(Hover)),
        "reactive" => Ok(Box::new(ReactiveDodger::default())),
        other => Err(BridgeError::Unknown(other.to_string())),
    }
}

fn toward(from: Vec3, to: Vec3, speed: f64) -> Vec3 {
    let d = to - from;
    let n = d.norm();
    if n > 0.0 {
        d * (speed / n)
    } else {
        Vec3::zeros()
    }
}

/// Flies at full speed straight at the goal and never looks at depth.
#[derive(Debug, Clone, Default)]
pub struct StraightLine {
    v_max: f64,
}

impl Algorithm for StraightLine {
    fn name(&self) -> &str {
        "straight-line"
    }

    fn uses_depth(&self) -> bool {
        false
    }

    fn on_trial_start(&mut self, handshake: &Handshake, _trial: &TrialStart) -> Result<(), BridgeError> {
        self.v_max = handshake.drone.v_max;
        Ok(())
    }

    fn compute_command(&mut self, obs: &Observation) -> Result<Command, BridgeError> {
        Ok(Command::velocity(toward(obs.state.position, obs.goal, self.v_max), obs.t))
    }
}

/// Commands zero velocity forever.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hover;

impl Algorithm for Hover {
    fn name(&self) -> &str {
        "hover"
    }

    fn uses_depth(&self) -> bool {
        false
    }

    fn on_trial_start(&mut self, _handshake: &Handshake, _trial: &TrialStart) -> Result<(), BridgeError> {
        Ok(())
    }

    fn compute_command(&mut self, obs: &Observation) -> Result<Command, BridgeError> {
        Ok(Command::velocity(Vec3::zeros(), obs.t))
    }
}

/// Depth-reactive gap seeker.
///
/// Each image column of the horizon band gives the nearest obstacle point
/// in that direction. A candidate direction is free when no such point lies
/// ahead of the drone within `lookahead` metres and closer than the
/// clearance radius to the flight line. The drone flies towards the goal
/// when that direction is free or outside the field of view, otherwise
/// along the free direction closest to the goal bearing, slowing down with
/// the distance to the nearest point in its corridor. With no free
/// direction it turns by `max_turn` towards the image half with the larger
/// mean depth at the lowest speed.
#[derive(Debug, Clone)]
pub struct ReactiveDodger {
    pub lookahead: f64,
    /// Added to the drone radius to form the clearance radius, metres.
    pub margin: f64,
    pub max_turn: f64,
    /// Fraction of image rows in the horizon band.
    pub band_rows: f64,
    /// Depths are capped here before averaging image halves.
    pub mean_cap: f64,
    /// Lowest speed as a fraction of `v_max`.
    pub min_speed: f64,
    v_max: f64,
    radius: f64,
}

impl Default for ReactiveDodger {
    fn default() -> Self {
        Self {
            lookahead: 4.0,
            margin: 0.0,
            max_turn: 60f64.to_radians(),
            band_rows: 0.15,
            mean_cap: 10.0,
            min_speed: 0.25,
            v_max: 0.0,
            radius: 0.0,
        }
    }
}

impl ReactiveDodger {
    /// Distance to the first obstacle point inside the corridor along
    /// `psi`, or infinity.
    fn corridor_hit(points: &[(f64, f64)], psi: f64, clearance: f64, reach: f64) -> f64 {
        let (c, s) = (psi.cos(), psi.sin());
        points
            .iter()
            .filter_map(|&(x, y)| {
                let along = x * c + y * s;
                let lateral = (y * c - x * s).abs();
                (along > 0.0 && lateral < clearance && along - clearance < reach).then_some(along)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The command rule, a pure function of the observation.
    pub fn command(&self, obs: &Observation) -> Command {
        let seek = Command::velocity(toward(obs.state.position, obs.goal, self.v_max), obs.t);
        let Some(img) = &obs.depth else { return seek };
        let to_goal = (obs.goal - obs.state.position).xy();
        let goal_dist = to_goal.norm();
        let (w, h) = (img.width as usize, img.height as usize);
        let focal = (w as f64 / 2.0) / (obs.camera.horizontal_fov / 2.0).tan();
        let band = ((h as f64 * self.band_rows).round() as usize).clamp(1, h);
        let rows = (h - band) / 2..(h - band) / 2 + band;

        // Column angles are relative to the heading, positive to the left.
        let angle = |u: usize| -((u as f64 + 0.5 - w as f64 / 2.0) / focal).atan();
        let mut points = Vec::with_capacity(w);
        let (mut left, mut right) = (0.0, 0.0);
        for u in 0..w {
            let d = rows.clone().map(|v| img.data[v * w + u] as f64).fold(f64::INFINITY, f64::min);
            if d < obs.camera.max_range - 1e-3 {
                let a = angle(u);
                points.push((d * a.cos(), d * a.sin()));
            }
            if u < w / 2 {
                left += d.min(self.mean_cap);
            } else if u >= w - w / 2 {
                right += d.min(self.mean_cap);
            }
        }

        let clearance = self.radius + self.margin;
        let reach = self.lookahead.min(goal_dist);
        let bearing = wrap(to_goal.y.atan2(to_goal.x) - obs.heading);
        let half_fov = obs.camera.horizontal_fov / 2.0;
        if bearing.abs() > half_fov || Self::corridor_hit(&points, bearing, clearance, reach).is_infinite() {
            return seek;
        }
        let speed = |hit: f64| self.v_max * (hit / self.lookahead).clamp(self.min_speed, 1.0);
        let best = (0..w)
            .map(angle)
            .filter(|&psi| Self::corridor_hit(&points, psi, clearance, reach).is_infinite())
            .min_by(|a, b| (a - bearing).abs().total_cmp(&(b - bearing).abs()));
        let (yaw, v) = match best {
            Some(psi) => {
                let ahead = Self::corridor_hit(&points, psi, clearance, f64::INFINITY);
                (obs.heading + psi, speed(ahead))
            }
            None => {
                let side = if left > right { 1.0 } else { -1.0 };
                (obs.heading + side * self.max_turn, self.v_max * self.min_speed)
            }
        };
        Command::velocity(Vec3::new(yaw.cos(), yaw.sin(), 0.0) * v, obs.t)
    }
}

fn wrap(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    (a + t / 2.0).rem_euclid(t) - t / 2.0
}

impl Algorithm for ReactiveDodger {
    fn name(&self) -> &str {
        "reactive"
    }

    fn on_trial_start(&mut self, handshake: &Handshake, _trial: &TrialStart) -> Result<(), BridgeError> {
        self.v_max = handshake.drone.v_max;
        self.radius = handshake.drone.diameter / 2.0;
        Ok(())
    }

    fn compute_command(&mut self, obs: &Observation) -> Result<Command, BridgeError> {
        Ok(self.command(obs))
    }
}
