//! Length-prefixed framing.
//!
//! A frame is a 4-byte little-endian unsigned body length followed by a
//! UTF-8 JSON body holding one [`Message`].

use std::io::{self, Read, Write};

use super::{BridgeError, Message};

/// Largest accepted body, bytes.
pub const MAX_FRAME: usize = 64 << 20;

pub fn encode(msg: &Message) -> Vec<u8> {
    let body = serde_json::to_vec(msg).expect("messages always serialize");
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(&body);
    out
}

/// Decodes one complete frame. The prefix must match the body length.
pub fn decode(frame: &[u8]) -> Result<Message, BridgeError> {
    if frame.len() < 4 {
        return Err(BridgeError::Protocol(format!("frame of {} bytes has no length prefix", frame.len())));
    }
    let len = u32::from_le_bytes([frame[0], frame[1], frame[2], frame[3]]) as usize;
    let body = &frame[4..];
    if len != body.len() {
        return Err(BridgeError::Protocol(format!("length prefix {len} does not match body of {} bytes", body.len())));
    }
    decode_body(body)
}

fn decode_body(body: &[u8]) -> Result<Message, BridgeError> {
    serde_json::from_slice(body).map_err(|e| BridgeError::Protocol(format!("malformed message body: {e}")))
}

pub fn write_frame<W: Write + ?Sized>(w: &mut W, msg: &Message) -> io::Result<()> {
    w.write_all(&encode(msg))?;
    w.flush()
}

/// Reads one frame. Returns `Ok(None)` on a clean end of stream before any
/// prefix byte.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> Result<Option<Message>, BridgeError> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(BridgeError::Protocol("stream ended inside a length prefix".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(prefix) as usize;
    if len > MAX_FRAME {
        return Err(BridgeError::Protocol(format!("frame of {len} bytes exceeds the {MAX_FRAME} byte limit")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => BridgeError::Protocol(format!("stream ended inside a {len} byte body")),
        _ => e.into(),
    })?;
    decode_body(&body).map(Some)
}
