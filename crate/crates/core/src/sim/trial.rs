use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{camera_yaw, render_depth, step, CameraModel, DroneParams, DroneState, StepOutcome};
use crate::bridge::{Algorithm, Command, Handshake, Observation, TrialEnd, TrialStart, PROTOCOL_VERSION};
use crate::geometry::{Contact, World};
use crate::mapgen::TrialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Finished,
    Collision,
    Timeout,
    /// The algorithm failed: transport error, watchdog, or invalid command.
    Fault,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Finished => "finished",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
            Outcome::Fault => "fault",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub goal_tolerance: f64,
    /// Longest accepted wall-clock time for one command, seconds.
    pub watchdog: f64,
    pub camera: CameraModel,
    pub drone: DroneParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 0.01, goal_tolerance: 1.0, watchdog: 1.0, camera: CameraModel::default(), drone: DroneParams::default() }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err("dt must be positive".into());
        }
        if !(self.goal_tolerance > 0.0) || !(self.watchdog > 0.0) {
            return Err("goal tolerance and watchdog must be positive".into());
        }
        self.camera.validate()?;
        self.drone.validate()
    }

    /// Physics steps per camera frame, at least one.
    pub fn steps_per_frame(&self) -> usize {
        ((1.0 / (self.camera.rate * self.dt)).round() as usize).max(1)
    }

    pub fn handshake(&self, world: &World) -> Handshake {
        Handshake {
            version: PROTOCOL_VERSION,
            camera: self.camera,
            drone: self.drone,
            bounds: *world.bounds(),
            dt: self.dt,
            goal_tolerance: self.goal_tolerance,
        }
    }
}

/// Timing of one command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandSample {
    /// Simulation time of the observation, seconds.
    pub t_issued: f64,
    /// Wall-clock duration of the call as seen by the benchmark, seconds.
    pub processing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_reported: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub outcome: Outcome,
    pub states: Vec<DroneState>,
    pub commands: Vec<CommandSample>,
    pub t_trial: f64,
    /// Travelled distance, metres.
    pub d_trav: f64,
    /// Shortest free path, when the oracle found one.
    pub d_min: Option<f64>,
    pub trial: TrialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<Contact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

impl TrialRecord {
    pub fn final_position(&self) -> crate::Vec3 {
        self.states.last().map_or(self.trial.start, |s| s.position)
    }
}

pub fn travelled_distance(states: &[DroneState]) -> f64 {
    states.windows(2).map(|w| (w[1].position - w[0].position).norm()).sum()
}

/// Runs one trial in lock-step.
///
/// The algorithm is asked for a command on every camera frame and the
/// command is held for the steps in between. The physics clock does not
/// advance while the algorithm computes. The trial ends when the drone is
/// within the goal tolerance, touches the scene, reaches `max_time`, or the
/// algorithm faults.
pub fn run_trial(
    world: &World,
    trial: &TrialSpec,
    trial_id: &str,
    algorithm: &mut dyn Algorithm,
    cfg: &SimConfig,
) -> TrialRecord {
    let handshake = cfg.handshake(world);
    let start = TrialStart { trial_id: trial_id.to_string(), start: trial.start, goal: trial.goal, max_time: trial.max_time };
    let mut state = DroneState::at_rest(trial.start);
    let mut states = vec![state];
    let mut commands = Vec::new();
    let mut contact = None;
    let mut fault = None;
    let frame = cfg.steps_per_frame();
    let watchdog = Duration::from_secs_f64(cfg.watchdog);
    let mut command = Command::velocity(crate::Vec3::zeros(), 0.0);

    let outcome = 'run: {
        if let Err(e) = algorithm.on_trial_start(&handshake, &start) {
            fault = Some(e.to_string());
            break 'run Outcome::Fault;
        }
        let mut k: u64 = 0;
        loop {
            if (state.position - trial.goal).norm() <= cfg.goal_tolerance {
                break 'run Outcome::Finished;
            }
            if state.t >= trial.max_time {
                break 'run Outcome::Timeout;
            }
            if k % frame as u64 == 0 {
                let heading = camera_yaw(state.velocity, state.position, trial.goal);
                let depth = if algorithm.uses_depth() {
                    match render_depth(world, state.position, heading, &cfg.camera) {
                        Ok(img) => Some(img),
                        Err(e) => {
                            fault = Some(e.to_string());
                            break 'run Outcome::Fault;
                        }
                    }
                } else {
                    None
                };
                let obs = Observation { t: state.t, state, goal: trial.goal, heading, depth, camera: cfg.camera };
                let began = Instant::now();
                let reply = algorithm.compute_command(&obs);
                let elapsed = began.elapsed();
                match reply {
                    Ok(c) if elapsed > watchdog => {
                        let _ = c;
                        fault = Some(format!("no command within the {} s watchdog", cfg.watchdog));
                        break 'run Outcome::Fault;
                    }
                    Ok(c) => {
                        commands.push(CommandSample {
                            t_issued: state.t,
                            processing: elapsed.as_secs_f64(),
                            self_reported: c.self_reported_processing,
                        });
                        command = c;
                    }
                    Err(e) => {
                        fault = Some(e.to_string());
                        break 'run Outcome::Fault;
                    }
                }
            }
            let t_next = (k + 1) as f64 * cfg.dt;
            match step(&state, &command, cfg.dt, &cfg.drone, world, t_next) {
                None => {
                    fault = Some("non-finite command".into());
                    break 'run Outcome::Fault;
                }
                Some(StepOutcome::Moved(next)) => {
                    state = next;
                    states.push(next);
                }
                Some(StepOutcome::Contact(at, c)) => {
                    if at.t > state.t {
                        states.push(at);
                    }
                    contact = Some(c);
                    break 'run Outcome::Collision;
                }
            }
            k += 1;
        }
    };

    let t_trial = states.last().map_or(0.0, |s| s.t);
    algorithm.on_trial_end(&TrialEnd { trial_id: trial_id.to_string(), outcome, t_trial });
    TrialRecord {
        outcome,
        d_trav: travelled_distance(&states),
        states,
        commands,
        t_trial,
        d_min: None,
        trial: *trial,
        contact,
        fault,
    }
}
