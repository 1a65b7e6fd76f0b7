use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::endpoint::Timeouts;
use super::messages::{Frame, ImageFormat, PROTOCOL_VERSION};
use super::{image_from_b64, image_to_b64, EndpointSpec, ProtocolError, Role, Transport, Verdict};
use crate::catalog::ClassCatalog;
use crate::image::{ImageBuffer, ImageSample};
use crate::manifest::WorkerIdentity;

/// What to do with lines from the worker that are not valid frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FramingPolicy {
    /// A bad line terminates the request in flight with a framing error.
    #[default]
    Strict,
    /// Bad lines are counted and skipped. Used by the conformance checker so
    /// one bad line does not hide every other result.
    Lenient,
}

/// Per-connection request accounting. Every request that was sent ends in
/// exactly one of response, error reply, timeout or failure.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct RequestStats {
    pub sent: u64,
    pub responses: u64,
    pub error_replies: u64,
    pub timeouts: u64,
    pub failures: u64,
    /// Replies to earlier, already-terminated requests; dropped.
    pub stale_replies: u64,
    pub framing_violations: u64,
    pub pred_overrides: u64,
}

impl RequestStats {
    pub fn terminal(&self) -> u64 {
        self.responses + self.error_replies + self.timeouts + self.failures
    }

    pub fn balanced(&self) -> bool {
        self.sent == self.terminal()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShutdownOutcome {
    AlreadyClosed,
    /// Subprocess exited on its own; exit code if it had one.
    Exited(Option<i32>),
    /// Subprocess ignored `shutdown` and was killed.
    Killed,
    /// Socket or in-process worker closed cleanly.
    Closed,
    /// In-process worker thread did not finish in time and was left behind.
    Detached,
}

/// Raw byte streams for a worker that is not reached through a subprocess
/// or a socket, e.g. a worker served on a thread in this process.
pub struct WorkerStreams {
    pub reader: Box<dyn Read + Send>,
    pub writer: Box<dyn Write + Send>,
    pub thread: Option<JoinHandle<()>>,
}

enum Incoming {
    Line(String),
    BadUtf8(Vec<u8>),
    Eof,
    ReadError(String),
}

enum Reaper {
    Child(Child),
    Thread(Option<JoinHandle<()>>),
    Socket(TcpStream),
}

struct Connection {
    outgoing: Option<Sender<String>>,
    writer_thread: Option<JoinHandle<()>>,
    incoming: Receiver<Incoming>,
    reaper: Reaper,
}

enum RecvFailure {
    Timeout,
    Closed(String),
    Framing { line: String, reason: String },
}

fn spawn_reader(reader: Box<dyn Read + Send>) -> Receiver<Incoming> {
    let (tx, rx) = mpsc::channel();
    thread::Builder::new()
        .name("worker-reader".into())
        .spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let mut buf = Vec::new();
                match reader.read_until(b'\n', &mut buf) {
                    Ok(0) => {
                        let _ = tx.send(Incoming::Eof);
                        return;
                    }
                    Ok(_) => {
                        while matches!(buf.last(), Some(b'\n' | b'\r')) {
                            buf.pop();
                        }
                        if buf.iter().all(|b| b.is_ascii_whitespace()) {
                            continue;
                        }
                        let msg = match String::from_utf8(buf) {
                            Ok(s) => Incoming::Line(s),
                            Err(e) => Incoming::BadUtf8(e.into_bytes()),
                        };
                        if tx.send(msg).is_err() {
                            return;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Incoming::ReadError(e.to_string()));
                        return;
                    }
                }
            }
        })
        .expect("spawn reader thread");
    rx
}

fn spawn_writer(mut writer: Box<dyn Write + Send>) -> (Sender<String>, JoinHandle<()>) {
    let (tx, rx) = mpsc::channel::<String>();
    let handle = thread::Builder::new()
        .name("worker-writer".into())
        .spawn(move || {
            for line in rx {
                if writer
                    .write_all(line.as_bytes())
                    .and_then(|_| writer.write_all(b"\n"))
                    .and_then(|_| writer.flush())
                    .is_err()
                {
                    return;
                }
            }
        })
        .expect("spawn writer thread");
    (tx, handle)
}

fn forward_stderr(label: String, stderr: impl Read + Send + 'static) {
    let _ = thread::Builder::new()
        .name("worker-stderr".into())
        .spawn(move || {
            for line in BufReader::new(stderr).lines() {
                match line {
                    Ok(line) => log::info!(target: "valigen::worker", "[{label}] {line}"),
                    Err(_) => return,
                }
            }
        });
}

/// A live, handshaken connection to one worker. One request at a time.
pub struct WorkerHandle {
    role: Role,
    identity: WorkerIdentity,
    catalog: Arc<ClassCatalog>,
    format: ImageFormat,
    timeouts: Timeouts,
    conn: Option<Connection>,
    next_id: u64,
    stats: RequestStats,
    framing: FramingPolicy,
    label: String,
}

impl std::fmt::Debug for WorkerHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerHandle")
            .field("role", &self.role)
            .field("identity", &self.identity)
            .field("live", &self.conn.is_some())
            .field("stats", &self.stats)
            .finish()
    }
}

/// Starts (or connects to) the worker described by `spec` and completes the
/// `init`/`ready` handshake.
pub fn spawn_worker(
    spec: &EndpointSpec,
    catalog: &ClassCatalog,
    format: ImageFormat,
) -> Result<WorkerHandle, ProtocolError> {
    spawn_worker_with(
        spec,
        Arc::new(catalog.clone()),
        format,
        FramingPolicy::Strict,
    )
}

pub fn spawn_worker_with(
    spec: &EndpointSpec,
    catalog: Arc<ClassCatalog>,
    format: ImageFormat,
    framing: FramingPolicy,
) -> Result<WorkerHandle, ProtocolError> {
    spec.validate()?;
    let timeouts = spec.timeouts();
    match &spec.transport {
        Transport::Subprocess { command } => {
            let label = command.join(" ");
            let mut child = Command::new(&command[0])
                .args(&command[1..])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::piped())
                .spawn()
                .map_err(|source| ProtocolError::Spawn {
                    command: label.clone(),
                    source,
                })?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            if let Some(stderr) = child.stderr.take() {
                forward_stderr(format!("{} {}", spec.role, command[0]), stderr);
            }
            let conn = Connection::new(Box::new(stdout), Box::new(stdin), Reaper::Child(child));
            WorkerHandle::handshake(conn, spec.role, catalog, format, timeouts, framing, label)
        }
        Transport::Tcp { address } => {
            let connect_err = |source| ProtocolError::Connect {
                address: address.clone(),
                source,
            };
            let addr = address
                .to_socket_addrs()
                .map_err(connect_err)?
                .next()
                .ok_or_else(|| connect_err(std::io::Error::other("address resolved to nothing")))?;
            let stream =
                TcpStream::connect_timeout(&addr, timeouts.handshake).map_err(connect_err)?;
            let _ = stream.set_nodelay(true);
            let reader = stream.try_clone()?;
            let writer = stream.try_clone()?;
            let conn = Connection::new(Box::new(reader), Box::new(writer), Reaper::Socket(stream));
            WorkerHandle::handshake(
                conn,
                spec.role,
                catalog,
                format,
                timeouts,
                framing,
                address.clone(),
            )
        }
    }
}

impl Connection {
    fn new(reader: Box<dyn Read + Send>, writer: Box<dyn Write + Send>, reaper: Reaper) -> Self {
        let incoming = spawn_reader(reader);
        let (outgoing, writer_thread) = spawn_writer(writer);
        Self {
            outgoing: Some(outgoing),
            writer_thread: Some(writer_thread),
            incoming,
            reaper,
        }
    }
}

impl WorkerHandle {
    /// Handshakes over caller-provided streams (in-process workers, tests).
    pub fn connect_streams(
        streams: WorkerStreams,
        role: Role,
        catalog: Arc<ClassCatalog>,
        format: ImageFormat,
        timeouts: Timeouts,
        framing: FramingPolicy,
        label: impl Into<String>,
    ) -> Result<Self, ProtocolError> {
        let conn = Connection::new(
            streams.reader,
            streams.writer,
            Reaper::Thread(streams.thread),
        );
        Self::handshake(conn, role, catalog, format, timeouts, framing, label.into())
    }

    fn handshake(
        conn: Connection,
        role: Role,
        catalog: Arc<ClassCatalog>,
        format: ImageFormat,
        timeouts: Timeouts,
        framing: FramingPolicy,
        label: String,
    ) -> Result<Self, ProtocolError> {
        let mut handle = Self {
            role,
            identity: WorkerIdentity {
                name: String::new(),
                version_tag: String::new(),
                checkpoint_step: None,
            },
            catalog,
            format,
            timeouts,
            conn: Some(conn),
            next_id: 1,
            stats: RequestStats::default(),
            framing,
            label,
        };
        match handle.run_handshake() {
            Ok(identity) => {
                handle.identity = identity;
                Ok(handle)
            }
            Err(e) => {
                handle.abort();
                Err(e)
            }
        }
    }

    fn run_handshake(&mut self) -> Result<WorkerIdentity, ProtocolError> {
        let init = Frame::Init {
            protocol: PROTOCOL_VERSION,
            role: self.role,
            catalog: self.catalog.to_value(),
            catalog_digest: self.catalog.digest().to_string(),
            image: self.format.clone(),
        };
        self.send_frame(&init)?;
        let deadline = Instant::now() + self.timeouts.handshake;
        let frame = match self.next_frame(deadline) {
            Ok(f) => f,
            Err(RecvFailure::Timeout) => {
                return Err(ProtocolError::HandshakeTimeout(self.timeouts.handshake))
            }
            Err(RecvFailure::Closed(why)) => {
                return Err(ProtocolError::Handshake(format!(
                    "worker closed before ready ({why})"
                )))
            }
            Err(RecvFailure::Framing { line, reason }) => {
                return Err(ProtocolError::Framing { line, reason })
            }
        };
        match frame {
            Frame::Ready {
                name,
                version_tag,
                checkpoint_step,
                role,
                catalog_digest,
            } => {
                if let Some(got) = role {
                    if got != self.role {
                        return Err(ProtocolError::RoleMismatch {
                            expected: self.role,
                            got,
                        });
                    }
                }
                if let Some(got) = catalog_digest {
                    if got != self.catalog.digest() {
                        return Err(ProtocolError::CatalogMismatch {
                            expected: self.catalog.digest().to_string(),
                            got,
                        });
                    }
                }
                Ok(WorkerIdentity {
                    name,
                    version_tag,
                    checkpoint_step,
                })
            }
            Frame::Error { code, message, .. } => {
                Err(ProtocolError::Handshake(format!("[{code}] {message}")))
            }
            other => Err(ProtocolError::UnexpectedFrame {
                expected: "ready",
                got: other.kind().to_string(),
            }),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn identity(&self) -> &WorkerIdentity {
        &self.identity
    }

    pub fn catalog(&self) -> &ClassCatalog {
        &self.catalog
    }

    pub fn format(&self) -> &ImageFormat {
        &self.format
    }

    pub fn stats(&self) -> RequestStats {
        self.stats
    }

    pub fn is_live(&self) -> bool {
        self.conn.is_some()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_framing_policy(&mut self, framing: FramingPolicy) {
        self.framing = framing;
    }

    fn send_line(&mut self, line: String) -> Result<(), ProtocolError> {
        let conn = self.conn.as_ref().ok_or(ProtocolError::Closed)?;
        conn.outgoing
            .as_ref()
            .ok_or(ProtocolError::Closed)?
            .send(line)
            .map_err(|_| ProtocolError::Closed)
    }

    fn send_frame(&mut self, frame: &Frame) -> Result<(), ProtocolError> {
        self.send_line(frame.to_line())
    }

    fn next_frame(&mut self, deadline: Instant) -> Result<Frame, RecvFailure> {
        loop {
            let conn = self
                .conn
                .as_ref()
                .ok_or(RecvFailure::Closed("handle shut down".into()))?;
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(RecvFailure::Timeout);
            }
            let (line, reason) = match conn.incoming.recv_timeout(remaining) {
                Ok(Incoming::Line(line)) => match Frame::parse(&line) {
                    Ok(frame) => return Ok(frame),
                    Err(e) => (line, e.to_string()),
                },
                Ok(Incoming::BadUtf8(bytes)) => (
                    String::from_utf8_lossy(&bytes).into_owned(),
                    "invalid utf-8".into(),
                ),
                Ok(Incoming::Eof) => return Err(RecvFailure::Closed("end of stream".into())),
                Ok(Incoming::ReadError(e)) => return Err(RecvFailure::Closed(e)),
                Err(RecvTimeoutError::Timeout) => return Err(RecvFailure::Timeout),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(RecvFailure::Closed("reader finished".into()))
                }
            };
            self.stats.framing_violations += 1;
            log::warn!("[{}] bad frame ({reason}): {line:?}", self.label);
            if self.framing == FramingPolicy::Strict {
                return Err(RecvFailure::Framing { line, reason });
            }
        }
    }

    fn allocate_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Sends a request built from a fresh id and waits for its terminal
    /// reply. Exactly one of the stats' terminal counters is incremented.
    fn request(
        &mut self,
        build: impl FnOnce(u64) -> Frame,
        timeout: Duration,
    ) -> Result<Frame, ProtocolError> {
        let id = self.allocate_id();
        let line = build(id).to_line();
        self.send_raw_request(id, line, timeout)
    }

    /// Sends an arbitrary line as request `id` and waits for the reply.
    /// Exposed to the conformance checker for malformed-frame probes.
    pub(crate) fn send_raw_request(
        &mut self,
        id: u64,
        line: String,
        timeout: Duration,
    ) -> Result<Frame, ProtocolError> {
        self.stats.sent += 1;
        if let Err(e) = self.send_line(line) {
            self.stats.failures += 1;
            return Err(e);
        }
        let deadline = Instant::now() + timeout;
        loop {
            match self.next_frame(deadline) {
                Ok(frame) => match frame.id() {
                    Some(rid) if rid == id => {
                        return match frame {
                            Frame::Error { id, code, message } => {
                                self.stats.error_replies += 1;
                                Err(ProtocolError::WorkerError { id, code, message })
                            }
                            other => {
                                self.stats.responses += 1;
                                Ok(other)
                            }
                        };
                    }
                    Some(rid) if rid < id => {
                        self.stats.stale_replies += 1;
                        log::debug!("[{}] dropping stale reply for request {rid}", self.label);
                    }
                    Some(rid) => {
                        self.stats.failures += 1;
                        return Err(ProtocolError::UnexpectedId {
                            expected: id,
                            got: rid,
                        });
                    }
                    None => {
                        return match frame {
                            Frame::Error { code, message, .. } => {
                                self.stats.error_replies += 1;
                                Err(ProtocolError::WorkerError {
                                    id: None,
                                    code,
                                    message,
                                })
                            }
                            other => {
                                self.stats.failures += 1;
                                Err(ProtocolError::UnexpectedFrame {
                                    expected: "reply",
                                    got: other.kind().to_string(),
                                })
                            }
                        };
                    }
                },
                Err(RecvFailure::Timeout) => {
                    self.stats.timeouts += 1;
                    return Err(ProtocolError::Timeout { id, after: timeout });
                }
                Err(RecvFailure::Closed(why)) => {
                    self.stats.failures += 1;
                    log::warn!(
                        "[{}] connection closed during request {id}: {why}",
                        self.label
                    );
                    return Err(ProtocolError::Closed);
                }
                Err(RecvFailure::Framing { line, reason }) => {
                    self.stats.failures += 1;
                    return Err(ProtocolError::Framing { line, reason });
                }
            }
        }
    }

    pub(crate) fn reserve_id(&mut self) -> u64 {
        self.allocate_id()
    }

    pub(crate) fn timeouts(&self) -> Timeouts {
        self.timeouts
    }

    fn require_role(&self, expected: Role) -> Result<(), ProtocolError> {
        if self.role != expected {
            return Err(ProtocolError::WrongRole {
                expected,
                actual: self.role,
            });
        }
        Ok(())
    }

    /// Asks the generator for one image of `class_id`. The reply must decode
    /// to exactly `width x height`.
    pub fn request_generate(
        &mut self,
        class_id: usize,
        seed: u64,
        width: u32,
        height: u32,
    ) -> Result<ImageSample, ProtocolError> {
        self.require_role(Role::Generator)?;
        let prompt = self
            .catalog
            .get(class_id)
            .ok_or_else(|| {
                ProtocolError::InvalidRequest(format!(
                    "class {class_id} out of range (k={})",
                    self.catalog.k()
                ))
            })?
            .prompt
            .clone();
        if (width, height) != self.format.dims() {
            return Err(ProtocolError::InvalidRequest(format!(
                "requested {width}x{height} but worker was initialised for {}x{}",
                self.format.width, self.format.height
            )));
        }
        let timeout = self.timeouts.generate;
        let reply = self.request(
            |id| Frame::Generate {
                id,
                class_id,
                prompt,
                seed,
            },
            timeout,
        )?;
        let Frame::Image { png_b64, .. } = reply else {
            return Err(ProtocolError::UnexpectedFrame {
                expected: "image",
                got: reply.kind().to_string(),
            });
        };
        let image = image_from_b64(&png_b64).map_err(ProtocolError::Undecodable)?;
        if image.dims() != (width, height) {
            return Err(ProtocolError::DimensionMismatch {
                expected: (width, height),
                got: image.dims(),
            });
        }
        let image = ImageBuffer::new(image.width(), image.height(), image.into_pixels())
            .map_err(|e| ProtocolError::Undecodable(e.to_string()))?;
        Ok(ImageSample::generated(
            image,
            class_id,
            seed,
            1,
            self.identity.to_string(),
        ))
    }

    /// Asks the validator for a verdict. The probability vector is checked
    /// and the prediction recomputed engine-side.
    pub fn request_classify(&mut self, img: &ImageBuffer) -> Result<Verdict, ProtocolError> {
        self.require_role(Role::Validator)?;
        let png_b64 = image_to_b64(img);
        let timeout = self.timeouts.classify;
        let reply = self.request(|id| Frame::Classify { id, png_b64 }, timeout)?;
        let Frame::Verdict { probs, pred, .. } = reply else {
            return Err(ProtocolError::UnexpectedFrame {
                expected: "verdict",
                got: reply.kind().to_string(),
            });
        };
        let (verdict, overridden) = Verdict::from_worker(probs, pred, self.catalog.k())?;
        if overridden {
            self.stats.pred_overrides += 1;
            log::warn!(
                "[{}] worker pred {pred} disagrees with argmax {}; using argmax",
                self.label,
                verdict.pred()
            );
        }
        Ok(verdict)
    }

    /// Sends `shutdown` and waits (up to the shutdown timeout) for the worker
    /// to go away, killing it if it does not. Idempotent.
    pub fn shutdown(&mut self) {
        self.shutdown_with_outcome();
    }

    pub fn shutdown_with_outcome(&mut self) -> ShutdownOutcome {
        let Some(mut conn) = self.conn.take() else {
            return ShutdownOutcome::AlreadyClosed;
        };
        if let Some(tx) = conn.outgoing.take() {
            let _ = tx.send(Frame::Shutdown.to_line());
        }
        // Dropping the sender lets the writer drain and close the stream.
        let deadline = Instant::now() + self.timeouts.shutdown;
        let writer_thread = conn.writer_thread.take();
        let outcome = match &mut conn.reaper {
            Reaper::Child(child) => loop {
                match child.try_wait() {
                    Ok(Some(status)) => break ShutdownOutcome::Exited(status.code()),
                    Ok(None) if Instant::now() < deadline => {
                        thread::sleep(Duration::from_millis(5))
                    }
                    _ => {
                        log::warn!("[{}] worker did not exit in time; killing", self.label);
                        let _ = child.kill();
                        let _ = child.wait();
                        break ShutdownOutcome::Killed;
                    }
                }
            },
            Reaper::Thread(handle) => loop {
                match handle {
                    None => break ShutdownOutcome::Closed,
                    Some(h) if h.is_finished() => {
                        let _ = handle.take().map(JoinHandle::join);
                        break ShutdownOutcome::Closed;
                    }
                    Some(_) if Instant::now() < deadline => thread::sleep(Duration::from_millis(2)),
                    Some(_) => {
                        log::warn!("[{}] in-process worker did not finish in time", self.label);
                        break ShutdownOutcome::Detached;
                    }
                }
            },
            Reaper::Socket(stream) => {
                // Give the writer a moment to flush the shutdown frame.
                if let Some(w) = writer_thread.as_ref() {
                    while !w.is_finished() && Instant::now() < deadline {
                        thread::sleep(Duration::from_millis(1));
                    }
                }
                let _ = stream.shutdown(Shutdown::Both);
                ShutdownOutcome::Closed
            }
        };
        if let Some(w) = writer_thread {
            if w.is_finished() {
                let _ = w.join();
            }
        }
        outcome
    }

    /// Immediate teardown without waiting.
    fn abort(&mut self) {
        let Some(mut conn) = self.conn.take() else {
            return;
        };
        conn.outgoing.take();
        match &mut conn.reaper {
            Reaper::Child(child) => {
                let _ = child.kill();
                let _ = child.wait();
            }
            Reaper::Socket(stream) => {
                let _ = stream.shutdown(Shutdown::Both);
            }
            Reaper::Thread(_) => {}
        }
    }
}

impl Drop for WorkerHandle {
    fn drop(&mut self) {
        if self.conn.is_some() {
            self.shutdown();
        }
    }
}
