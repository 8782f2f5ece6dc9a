use serde::{Deserialize, Serialize};

use crate::bridge::{Command, CommandKind};
use crate::geometry::{Contact, World};
use crate::Vec3;

/// Physical parameters of the simulated drone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DroneParams {
    /// Diameter of the spherical collision body, metres.
    pub diameter: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// Time constant of the velocity tracking lag, seconds.
    pub velocity_time_constant: f64,
    /// Proportional gain turning a waypoint offset into a velocity, 1/s.
    pub waypoint_gain: f64,
}

impl Default for DroneParams {
    fn default() -> Self {
        Self {
            diameter: 0.6,
            v_max: 3.0,
            a_max: 6.0,
            velocity_time_constant: 0.25,
            waypoint_gain: 1.0,
        }
    }
}

impl DroneParams {
    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.diameter) && ok(self.v_max) && ok(self.a_max) && ok(self.velocity_time_constant) && ok(self.waypoint_gain)) {
            return Err("drone parameters must be positive and finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    /// Acceleration applied over the step that produced this state.
    pub acceleration: Vec3,
}

impl DroneState {
    pub fn at_rest(position: Vec3) -> Self {
        Self { t: 0.0, position, velocity: Vec3::zeros(), acceleration: Vec3::zeros() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Moved(DroneState),
    /// The step segment hit the scene. The state is the drone at the contact.
    Contact(DroneState, Contact),
}

fn clamp_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

/// Advances the point mass by `dt` towards the commanded velocity.
///
/// The desired velocity is clamped to `v_max`, the lag acceleration
/// `(v_des - v) / tau` is clamped to `a_max`, velocity is integrated and
/// clamped again to `v_max`, and position is integrated with the new
/// velocity (semi-implicit Euler). The recorded acceleration is exactly
/// `(v_new - v) / dt`. Returns `None` for a non-finite command.
pub fn step(state: &DroneState, cmd: &Command, dt: f64, drone: &DroneParams, world: &World, t_next: f64) -> Option<StepOutcome> {
    if !cmd.vector.iter().all(|c| c.is_finite()) {
        return None;
    }
    let desired = match cmd.kind {
        CommandKind::Velocity => cmd.vector,
        CommandKind::Waypoint => (cmd.vector - state.position) * drone.waypoint_gain,
    };
    let desired = clamp_norm(desired, drone.v_max);
    let accel = clamp_norm((desired - state.velocity) / drone.velocity_time_constant, drone.a_max);
    let velocity = clamp_norm(state.velocity + accel * dt, drone.v_max);
    let acceleration = (velocity - state.velocity) / dt;
    let position = state.position + velocity * dt;
    let next = DroneState { t: t_next, position, velocity, acceleration };

    Some(match world.swept_collision(state.position, position, drone.diameter) {
        Some(contact) => {
            let t = state.t + contact.fraction * (t_next - state.t);
            StepOutcome::Contact(DroneState { t, position: contact.drone_position, ..next }, contact)
        }
        None => StepOutcome::Moved(next),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bounds, Cylinder, ObstacleMap};
    use crate::Vec2;

    fn vel(x: f64, y: f64) -> Command {
        Command::velocity(Vec3::new(x, y, 0.0), 0.0)
    }

    #[test]
    fn speed_approaches_setpoint_without_exceeding_it() {
        let w = World::new(ObstacleMap::empty(Bounds::centered(100.0, 100.0)));
        let p = DroneParams { a_max: 4.0, ..DroneParams::default() };
        let mut s = DroneState::at_rest(Vec3::new(0.0, 0.0, 1.5));
        let mut last = 0.0;
        for k in 0..300 {
            let StepOutcome::Moved(n) = step(&s, &vel(1.0, 0.0), 0.01, &p, &w, (k + 1) as f64 * 0.01).unwrap() else {
                panic!("unexpected contact")
            };
            let speed = n.velocity.norm();
            assert!(speed <= 1.0 + 1e-12 && speed >= last);
            assert!(n.acceleration.norm() <= 4.0 + 1e-9);
            last = speed;
            s = n;
        }
        assert!(last > 0.99);
    }

    #[test]
    fn wall_of_obstacles_stops_the_drone() {
        let cyl = (-5..=5).map(|k| Cylinder::new(Vec2::new(5.0, k as f64 * 0.5), 0.3, 5.0)).collect();
        let w = World::new(ObstacleMap::with_cylinders(Bounds::centered(40.0, 40.0), cyl));
        let p = DroneParams::default();
        let mut s = DroneState::at_rest(Vec3::new(0.0, 0.0, 1.5));
        for k in 0..1000 {
            match step(&s, &vel(3.0, 0.0), 0.01, &p, &w, (k + 1) as f64 * 0.01).unwrap() {
                StepOutcome::Moved(n) => s = n,
                StepOutcome::Contact(n, c) => {
                    assert!(n.position.x <= 5.0 - 0.3 - 0.3 + 1e-9);
                    assert!(n.t > s.t && n.t <= (k + 1) as f64 * 0.01);
                    assert!(matches!(c.target, crate::geometry::ContactTarget::Obstacle(_)));
                    return;
                }
            }
        }
        panic!("never hit the wall");
    }

    #[test]
    fn non_finite_commands_are_rejected() {
        let w = World::new(ObstacleMap::empty(Bounds::centered(10.0, 10.0)));
        let s = DroneState::at_rest(Vec3::new(0.0, 0.0, 1.5));
        assert!(step(&s, &vel(f64::NAN, 0.0), 0.01, &DroneParams::default(), &w, 0.01).is_none());
    }

    #[test]
    fn waypoint_commands_converge() {
        let w = World::new(ObstacleMap::empty(Bounds::centered(40.0, 40.0)));
        let p = DroneParams::default();
        let mut s = DroneState::at_rest(Vec3::new(0.0, 0.0, 1.5));
        let cmd = Command { kind: CommandKind::Waypoint, vector: Vec3::new(3.0, 4.0, 1.5), issued_at: 0.0, self_reported_processing: None };
        for k in 0..2000 {
            if let StepOutcome::Moved(n) = step(&s, &cmd, 0.01, &p, &w, (k + 1) as f64 * 0.01).unwrap() {
                s = n;
            }
        }
        assert!((s.position - Vec3::new(3.0, 4.0, 1.5)).norm() < 1e-3);
    }
}
