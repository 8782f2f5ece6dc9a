//! Agent side of the protocol.
//!
//! [`serve`] runs any [`Algorithm`] behind a framed byte stream, the same
//! loop an external agent implements in its own language.

use std::io::{Read, Write};
use std::time::Instant;

use super::codec::{read_frame, write_frame};
use super::{Algorithm, BridgeError, Fault, Handshake, HandshakeAck, Message, PROTOCOL_VERSION};

/// Serves one session until the benchmark closes the stream.
///
/// Returns the number of commands sent. A failing algorithm or a
/// non-finite command produces a fault frame and ends the session.
pub fn serve<R: Read, W: Write>(mut reader: R, mut writer: W, algorithm: &mut dyn Algorithm) -> Result<usize, BridgeError> {
    let mut handshake: Option<Handshake> = None;
    let mut sent = 0;
    let fail = |w: &mut W, e: BridgeError| -> BridgeError {
        let _ = write_frame(w, &Message::Fault(Fault { message: e.to_string() }));
        e
    };
    loop {
        let Some(msg) = read_frame(&mut reader)? else { return Ok(sent) };
        match msg {
            Message::Handshake(h) => {
                if h.version != PROTOCOL_VERSION {
                    return Err(fail(&mut writer, BridgeError::Version { expected: PROTOCOL_VERSION, got: h.version }));
                }
                let ack = HandshakeAck {
                    version: PROTOCOL_VERSION,
                    name: algorithm.name().to_string(),
                    wants_depth: algorithm.uses_depth(),
                };
                write_frame(&mut writer, &Message::HandshakeAck(ack))?;
                handshake = Some(h);
            }
            Message::TrialStart(ts) => {
                let Some(h) = &handshake else {
                    return Err(fail(&mut writer, BridgeError::Protocol("trial_start before handshake".into())));
                };
                if let Err(e) = algorithm.on_trial_start(h, &ts) {
                    return Err(fail(&mut writer, e));
                }
            }
            Message::Observation(obs) => {
                if handshake.is_none() {
                    return Err(fail(&mut writer, BridgeError::Protocol("observation before handshake".into())));
                }
                let began = Instant::now();
                let mut cmd = match algorithm.compute_command(&obs) {
                    Ok(c) if c.is_finite() => c,
                    Ok(_) => return Err(fail(&mut writer, BridgeError::Agent("non-finite command".into()))),
                    Err(e) => return Err(fail(&mut writer, e)),
                };
                cmd.issued_at = obs.t;
                cmd.self_reported_processing = Some(began.elapsed().as_secs_f64());
                write_frame(&mut writer, &Message::Command(cmd))?;
                sent += 1;
            }
            Message::TrialEnd(end) => algorithm.on_trial_end(&end),
            Message::Fault(f) => return Err(BridgeError::Agent(f.message)),
            other => {
                return Err(fail(&mut writer, BridgeError::Protocol(format!("unexpected {} frame", other.kind()))));
            }
        }
    }
}
