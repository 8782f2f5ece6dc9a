use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::process::{Child, ChildStdin, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::codec::{read_frame, write_frame};
use super::{Algorithm, BridgeError, Command, Fault, Handshake, Message, Observation, TrialEnd, TrialStart, PROTOCOL_VERSION};

/// How to reach an external agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "snake_case")]
pub enum Endpoint {
    /// Spawn `program` and exchange frames over its stdin and stdout.
    Stdio {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
    /// Listen on `address` and wait for one agent to connect.
    Listen { address: String },
}

/// Time allowed for an agent to connect and acknowledge the handshake.
const STARTUP_TIMEOUT: Duration = Duration::from_secs(30);

/// An algorithm running in another process.
pub struct ExternalAlgorithm {
    name: String,
    incoming: Receiver<Result<Message, BridgeError>>,
    writer: Option<Box<dyn Write + Send>>,
    child: Option<Child>,
    refuser: Option<Refuser>,
    socket: Option<TcpStream>,
    watchdog: Duration,
    acknowledged: bool,
    wants_depth: bool,
}

impl std::fmt::Debug for ExternalAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalAlgorithm").field("name", &self.name).field("acknowledged", &self.acknowledged).finish()
    }
}

/// Answers every further connection on a listener with a busy fault.
struct Refuser {
    stop: Arc<AtomicBool>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Drop for Refuser {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// A bound listener waiting for its agent.
pub struct PendingListener {
    listener: TcpListener,
}

impl PendingListener {
    pub fn bind(address: &str) -> Result<Self, BridgeError> {
        Ok(Self { listener: TcpListener::bind(address)? })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, BridgeError> {
        Ok(self.listener.local_addr()?)
    }

    /// Waits for the first connection. Later connections are refused for as
    /// long as the returned algorithm lives.
    pub fn accept(self, name: &str, timeout: Duration, watchdog: Duration) -> Result<ExternalAlgorithm, BridgeError> {
        self.listener.set_nonblocking(true)?;
        let deadline = Instant::now() + timeout;
        let stream = loop {
            match self.listener.accept() {
                Ok((s, _)) => break s,
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(BridgeError::Protocol(format!("no agent connected within {} s", timeout.as_secs_f64())));
                    }
                    thread::sleep(Duration::from_millis(10));
                }
                Err(e) => return Err(e.into()),
            }
        };
        stream.set_nonblocking(false)?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        let handle = stream.try_clone()?;
        let mut alg = ExternalAlgorithm::from_streams(name, reader, stream, watchdog);
        alg.socket = Some(handle);

        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let listener = self.listener;
        let handle = thread::spawn(move || {
            while !flag.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((mut s, _)) => {
                        let _ = s.set_nonblocking(false);
                        let busy = Fault { message: "busy: another agent is already connected".into() };
                        let _ = write_frame(&mut s, &Message::Fault(busy));
                    }
                    Err(_) => thread::sleep(Duration::from_millis(20)),
                }
            }
        });
        alg.refuser = Some(Refuser { stop, handle: Some(handle) });
        Ok(alg)
    }
}

impl ExternalAlgorithm {
    pub fn connect(endpoint: &Endpoint, watchdog: Duration) -> Result<Self, BridgeError> {
        match endpoint {
            Endpoint::Stdio { program, args } => Self::spawn(program, args, watchdog),
            Endpoint::Listen { address } => PendingListener::bind(address)?.accept(address, STARTUP_TIMEOUT, watchdog),
        }
    }

    pub fn spawn(program: &str, args: &[String], watchdog: Duration) -> Result<Self, BridgeError> {
        let mut child = std::process::Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin: ChildStdin = child.stdin.take().expect("piped stdin");
        let mut alg = Self::from_streams(program, stdout, stdin, watchdog);
        alg.child = Some(child);
        Ok(alg)
    }

    /// Wraps an already connected byte stream pair.
    pub fn from_streams<R, W>(name: &str, reader: R, writer: W, watchdog: Duration) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let frame = read_frame(&mut reader);
                let done = !matches!(frame, Ok(Some(_)));
                let item = match frame {
                    Ok(Some(m)) => Ok(m),
                    Ok(None) => Err(BridgeError::Protocol("agent closed the connection".into())),
                    Err(e) => Err(e),
                };
                if tx.send(item).is_err() || done {
                    break;
                }
            }
        });
        Self {
            name: name.to_string(),
            incoming: rx,
            writer: Some(Box::new(BufWriter::new(writer))),
            child: None,
            refuser: None,
            socket: None,
            watchdog,
            acknowledged: false,
            wants_depth: true,
        }
    }

    fn send(&mut self, msg: &Message) -> Result<(), BridgeError> {
        let w = self.writer.as_mut().ok_or_else(|| BridgeError::Protocol("connection closed".into()))?;
        write_frame(w, msg)?;
        Ok(())
    }

    fn receive(&self, deadline: Instant, limit: Duration) -> Result<Message, BridgeError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.incoming.recv_timeout(wait) {
            Ok(Ok(Message::Fault(f))) => Err(BridgeError::Agent(f.message)),
            Ok(item) => item,
            Err(RecvTimeoutError::Timeout) => Err(BridgeError::Watchdog(limit.as_secs_f64())),
            Err(RecvTimeoutError::Disconnected) => Err(BridgeError::Protocol("agent closed the connection".into())),
        }
    }

    fn handshake(&mut self, h: &Handshake) -> Result<(), BridgeError> {
        self.send(&Message::Handshake(h.clone()))?;
        let deadline = Instant::now() + STARTUP_TIMEOUT;
        match self.receive(deadline, STARTUP_TIMEOUT)? {
            Message::HandshakeAck(ack) if ack.version == PROTOCOL_VERSION => {
                self.name = ack.name;
                self.wants_depth = ack.wants_depth;
                self.acknowledged = true;
                Ok(())
            }
            Message::HandshakeAck(ack) => Err(BridgeError::Version { expected: PROTOCOL_VERSION, got: ack.version }),
            other => Err(BridgeError::Protocol(format!("expected handshake_ack, got {}", other.kind()))),
        }
    }
}

impl Algorithm for ExternalAlgorithm {
    fn name(&self) -> &str {
        &self.name
    }

    fn uses_depth(&self) -> bool {
        self.wants_depth
    }

    fn on_trial_start(&mut self, handshake: &Handshake, trial: &TrialStart) -> Result<(), BridgeError> {
        if !self.acknowledged {
            self.handshake(handshake)?;
        }
        // Drop replies that arrived after an earlier watchdog expiry.
        while let Ok(item) = self.incoming.try_recv() {
            item?;
        }
        self.send(&Message::TrialStart(trial.clone()))
    }

    fn compute_command(&mut self, obs: &Observation) -> Result<Command, BridgeError> {
        let deadline = Instant::now() + self.watchdog;
        self.send(&Message::Observation(obs.clone()))?;
        loop {
            match self.receive(deadline, self.watchdog)? {
                // Stale answers to an observation that already timed out.
                Message::Command(c) if c.issued_at.to_bits() != obs.t.to_bits() => continue,
                Message::Command(c) => return Ok(c),
                other => return Err(BridgeError::Protocol(format!("expected command, got {}", other.kind()))),
            }
        }
    }

    fn on_trial_end(&mut self, end: &TrialEnd) {
        let _ = self.send(&Message::TrialEnd(end.clone()));
    }
}

impl Drop for ExternalAlgorithm {
    fn drop(&mut self) {
        // Closing the writer signals end of session to the agent.
        self.writer = None;
        if let Some(s) = self.socket.take() {
            let _ = s.shutdown(Shutdown::Write);
        }
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_secs(2);
            loop {
                match child.try_wait() {
                    Ok(Some(_)) => break,
                    Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                    _ => {
                        let _ = child.kill();
                        let _ = child.wait();
                        break;
                    }
                }
            }
        }
        self.refuser = None;
    }
}
