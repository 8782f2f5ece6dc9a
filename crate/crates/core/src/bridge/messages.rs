use serde::{Deserialize, Serialize};

use crate::geometry::Bounds;
use crate::sim::{CameraModel, DepthImage, DroneParams, DroneState, Outcome};
use crate::Vec3;

/// Wire protocol version. Agents must echo it in their acknowledgement.
pub const PROTOCOL_VERSION: u32 = 1;

/// First message of a session, benchmark to agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub version: u32,
    pub camera: CameraModel,
    pub drone: DroneParams,
    pub bounds: Bounds,
    /// Simulation step, seconds.
    pub dt: f64,
    pub goal_tolerance: f64,
}

/// Agent reply to [`Handshake`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshakeAck {
    pub version: u32,
    pub name: String,
    /// Agents that never read depth may opt out of receiving it.
    #[serde(default = "yes")]
    pub wants_depth: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStart {
    pub trial_id: String,
    pub start: Vec3,
    pub goal: Vec3,
    pub max_time: f64,
}

/// Sensor packet for one camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Trial time, seconds.
    pub t: f64,
    pub state: DroneState,
    pub goal: Vec3,
    /// Camera yaw in the map frame, radians.
    pub heading: f64,
    /// Absent for algorithms that declared they do not read depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<DepthImage>,
    pub camera: CameraModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    /// `vector` is a velocity setpoint, m/s.
    Velocity,
    /// `vector` is a target position in the map frame, m.
    Waypoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub kind: CommandKind,
    pub vector: Vec3,
    /// Observation time this command answers, seconds.
    pub issued_at: f64,
    /// Processing time measured by the agent itself, seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_reported_processing: Option<f64>,
}

impl Command {
    pub fn velocity(v: Vec3, issued_at: f64) -> Self {
        Self { kind: CommandKind::Velocity, vector: v, issued_at, self_reported_processing: None }
    }

    pub fn is_finite(&self) -> bool {
        self.vector.iter().all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEnd {
    pub trial_id: String,
    pub outcome: Outcome,
    pub t_trial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fault {
    pub message: String,
}

/// Every frame body on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Handshake(Handshake),
    HandshakeAck(HandshakeAck),
    TrialStart(TrialStart),
    Observation(Observation),
    Command(Command),
    TrialEnd(TrialEnd),
    Fault(Fault),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Handshake(_) => "handshake",
            Message::HandshakeAck(_) => "handshake_ack",
            Message::TrialStart(_) => "trial_start",
            Message::Observation(_) => "observation",
            Message::Command(_) => "command",
            Message::TrialEnd(_) => "trial_end",
            Message::Fault(_) => "fault",
        }
    }
}
