//! Algorithm interface.
//!
//! Algorithms implement [`Algorithm`] directly (in-process) or run as a
//! separate process speaking the framed protocol in [`codec`], wrapped by
//! [`ExternalAlgorithm`]. The runner drives either through the same calls:
//! `on_trial_start`, then one `compute_command` per camera frame, then
//! `on_trial_end`.

pub mod agent;
mod baselines;
pub mod codec;
mod external;
mod messages;

pub use baselines::{builtin, Hover, ReactiveDodger, StraightLine, BUILTIN_NAMES};
pub use external::{Endpoint, ExternalAlgorithm, PendingListener};
pub use messages::{
    Command, CommandKind, Fault, Handshake, HandshakeAck, Message, Observation, TrialEnd, TrialStart, PROTOCOL_VERSION,
};

use thiserror::Error;

/// The wire grammar, as printed by `bench protocol-docs`.
pub const PROTOCOL_DOC: &str = include_str!("../../../../docs/protocol.md");

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
    #[error("no command within the {0} s watchdog")]
    Watchdog(f64),
    #[error("protocol version mismatch: benchmark speaks {expected}, agent {got}")]
    Version { expected: u32, got: u32 },
    #[error("agent fault: {0}")]
    Agent(String),
    #[error("unknown algorithm {0:?}")]
    Unknown(String),
}

/// The plugin contract.
pub trait Algorithm: Send {
    fn name(&self) -> &str;

    /// Whether observations need a depth image. Rendering is skipped when
    /// this is false.
    fn uses_depth(&self) -> bool {
        true
    }

    fn on_trial_start(&mut self, handshake: &Handshake, trial: &TrialStart) -> Result<(), BridgeError>;

    fn compute_command(&mut self, obs: &Observation) -> Result<Command, BridgeError>;

    fn on_trial_end(&mut self, _end: &TrialEnd) {}
}

impl<A: Algorithm + ?Sized> Algorithm for Box<A> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn uses_depth(&self) -> bool {
        (**self).uses_depth()
    }

    fn on_trial_start(&mut self, handshake: &Handshake, trial: &TrialStart) -> Result<(), BridgeError> {
        (**self).on_trial_start(handshake, trial)
    }

    fn compute_command(&mut self, obs: &Observation) -> Result<Command, BridgeError> {
        (**self).compute_command(obs)
    }

    fn on_trial_end(&mut self, end: &TrialEnd) {
        (**self).on_trial_end(end)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples_are_valid_messages() {
        let mut kinds = Vec::new();
        for block in PROTOCOL_DOC.split("```json").skip(1) {
            let json = block.split("```").next().unwrap();
            let msg: Message = serde_json::from_str(json).unwrap_or_else(|e| panic!("{e}: {json}"));
            kinds.push(msg.kind());
        }
        assert_eq!(kinds, ["handshake", "handshake_ack", "trial_start", "observation", "command", "trial_end", "fault"]);
        assert!(PROTOCOL_DOC.contains(&format!("version {PROTOCOL_VERSION}")));
    }
}
