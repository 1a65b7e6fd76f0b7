use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::centroid::centroid_classify_k;
use super::stub::{StubPolicy, StubValidator};
use super::texture::{render_texture, FidelityParams, PALETTE};
use crate::catalog::ClassCatalog;
use crate::protocol::{
    image_from_b64, image_to_b64, Frame, FramingPolicy, ImageFormat, ProtocolError, Role, Timeouts,
    WorkerHandle, WorkerStreams,
};

#[derive(Debug, Clone)]
pub enum ReferenceRole {
    Generator(FidelityParams),
    Centroid,
    Stub { policy: StubPolicy, seed: u64 },
}

impl ReferenceRole {
    pub fn protocol_role(&self) -> Role {
        match self {
            ReferenceRole::Generator(_) => Role::Generator,
            ReferenceRole::Centroid | ReferenceRole::Stub { .. } => Role::Validator,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceWorkerConfig {
    pub role: ReferenceRole,
    pub name: String,
    pub version_tag: String,
    pub checkpoint_step: Option<u64>,
}

impl ReferenceWorkerConfig {
    pub fn generator(params: FidelityParams) -> Self {
        Self::named(ReferenceRole::Generator(params), "reference-texture")
    }

    pub fn centroid() -> Self {
        Self::named(ReferenceRole::Centroid, "reference-centroid")
    }

    pub fn stub(policy: StubPolicy, seed: u64) -> Self {
        Self::named(ReferenceRole::Stub { policy, seed }, "reference-stub")
    }

    fn named(role: ReferenceRole, name: &str) -> Self {
        Self {
            role,
            name: name.to_string(),
            version_tag: "ref-1".to_string(),
            checkpoint_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkerTransport {
    Stdio,
    /// Listen on `127.0.0.1:<port>`; port 0 picks a free one.
    Tcp(u16),
}

impl std::str::FromStr for WorkerTransport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stdio" {
            return Ok(WorkerTransport::Stdio);
        }
        s.strip_prefix("tcp:")
            .and_then(|p| p.parse().ok())
            .map(WorkerTransport::Tcp)
            .ok_or_else(|| format!("transport must be `stdio` or `tcp:<port>`, got {s:?}"))
    }
}

struct Session<'a> {
    config: &'a ReferenceWorkerConfig,
    catalog: Option<ClassCatalog>,
    format: Option<ImageFormat>,
    stub: Option<StubValidator>,
}

enum Step {
    Reply(Frame),
    Silent,
    Stop,
}

impl<'a> Session<'a> {
    fn new(config: &'a ReferenceWorkerConfig) -> Self {
        Self {
            config,
            catalog: None,
            format: None,
            stub: None,
        }
    }

    fn handle_line(&mut self, line: &str) -> Step {
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                return Step::Reply(Frame::error(None, "bad_frame", format!("not json: {e}")))
            }
        };
        let id = value.get("id").and_then(|v| v.as_u64());
        let frame: Frame = match serde_json::from_value(value) {
            Ok(f) => f,
            Err(e) => return Step::Reply(Frame::error(id, "bad_frame", e.to_string())),
        };
        match frame {
            Frame::Init {
                role,
                catalog,
                image,
                ..
            } => Step::Reply(self.init(role, catalog, image)),
            Frame::Generate {
                id, class_id, seed, ..
            } => Step::Reply(self.generate(id, class_id, seed)),
            Frame::Classify { id, png_b64 } => Step::Reply(self.classify(id, &png_b64)),
            Frame::Shutdown => Step::Stop,
            other => {
                if matches!(other, Frame::Error { .. }) {
                    log::warn!("engine sent error frame: {other:?}");
                    return Step::Silent;
                }
                Step::Reply(Frame::error(
                    other.id(),
                    "unexpected_frame",
                    format!("workers do not accept `{}` frames", other.kind()),
                ))
            }
        }
    }

    fn init(&mut self, role: Role, catalog: serde_json::Value, image: ImageFormat) -> Frame {
        let expected = self.config.role.protocol_role();
        if role != expected {
            return Frame::error(
                None,
                "role_mismatch",
                format!("this worker serves {expected}, not {role}"),
            );
        }
        let catalog = match ClassCatalog::from_json(&catalog.to_string()) {
            Ok(c) => c,
            Err(e) => return Frame::error(None, "bad_catalog", e.to_string()),
        };
        match &self.config.role {
            ReferenceRole::Generator(_) | ReferenceRole::Centroid
                if catalog.k() > PALETTE.len() =>
            {
                return Frame::error(
                    None,
                    "unsupported_catalog",
                    format!(
                        "reference palette has {} classes, catalog has {}",
                        PALETTE.len(),
                        catalog.k()
                    ),
                );
            }
            ReferenceRole::Stub { policy, seed } => {
                if policy.k() != catalog.k() {
                    return Frame::error(
                        None,
                        "unsupported_catalog",
                        format!(
                            "stub matrix is {0}x{0}, catalog has {1} classes",
                            policy.k(),
                            catalog.k()
                        ),
                    );
                }
                self.stub = Some(StubValidator::new(policy.clone(), *seed));
            }
            _ => {}
        }
        let digest = catalog.digest().to_string();
        self.catalog = Some(catalog);
        self.format = Some(image);
        Frame::Ready {
            name: self.config.name.clone(),
            version_tag: self.config.version_tag.clone(),
            checkpoint_step: self.config.checkpoint_step,
            role: Some(expected),
            catalog_digest: Some(digest),
        }
    }

    fn generate(&mut self, id: u64, class_id: usize, seed: u64) -> Frame {
        let (Some(catalog), Some(format)) = (&self.catalog, &self.format) else {
            return Frame::error(Some(id), "not_initialized", "generate before init");
        };
        let ReferenceRole::Generator(params) = self.config.role else {
            return Frame::error(Some(id), "wrong_role", "this worker does not generate");
        };
        if class_id >= catalog.k() {
            return Frame::error(
                Some(id),
                "bad_class",
                format!("class {class_id} out of range"),
            );
        }
        if format.width < 4 || format.height < 4 {
            return Frame::error(Some(id), "bad_size", "image sides must be at least 4");
        }
        let (img, _) = render_texture(
            catalog.k(),
            class_id,
            seed,
            format.width,
            format.height,
            params,
        );
        Frame::Image {
            id,
            png_b64: image_to_b64(&img),
        }
    }

    fn classify(&mut self, id: u64, png_b64: &str) -> Frame {
        let Some(catalog) = &self.catalog else {
            return Frame::error(Some(id), "not_initialized", "classify before init");
        };
        let k = catalog.k();
        let img = match image_from_b64(png_b64) {
            Ok(img) => img,
            Err(e) => return Frame::error(Some(id), "bad_image", e),
        };
        let verdict = match &self.config.role {
            ReferenceRole::Generator(_) => {
                return Frame::error(Some(id), "wrong_role", "this worker does not classify");
            }
            ReferenceRole::Centroid => centroid_classify_k(&img, k),
            ReferenceRole::Stub { .. } => {
                let stub = self.stub.as_mut().expect("stub set at init");
                match stub.classify(&img) {
                    Ok(v) => v,
                    Err(e) => return Frame::error(Some(id), "untagged", e.to_string()),
                }
            }
        };
        Frame::Verdict {
            id,
            pred: verdict.pred(),
            probs: verdict.probs().to_vec(),
        }
    }
}

/// Serves one protocol session until `shutdown` or end of input.
pub fn serve<R: BufRead, W: Write>(
    config: &ReferenceWorkerConfig,
    input: R,
    mut output: W,
) -> io::Result<()> {
    let mut session = Session::new(config);
    for line in input.lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                writeln!(
                    output,
                    "{}",
                    Frame::error(None, "bad_frame", "invalid utf-8").to_line()
                )?;
                output.flush()?;
                continue;
            }
            Err(e) => return Err(e),
        };
        if line.trim().is_empty() {
            continue;
        }
        match session.handle_line(&line) {
            Step::Reply(frame) => {
                writeln!(output, "{}", frame.to_line())?;
                output.flush()?;
            }
            Step::Silent => {}
            Step::Stop => return Ok(()),
        }
    }
    Ok(())
}

/// Accepts connections on `listener`, one session per connection, until a
/// `shutdown` has been received and every open session has ended.
pub fn serve_tcp(config: &ReferenceWorkerConfig, listener: TcpListener) -> io::Result<()> {
    listener.set_nonblocking(true)?;
    let active = Arc::new(AtomicUsize::new(0));
    let shutdown_seen = Arc::new(AtomicBool::new(false));
    loop {
        match listener.accept() {
            Ok((stream, peer)) => {
                stream.set_nonblocking(false)?;
                let _ = stream.set_nodelay(true);
                active.fetch_add(1, Ordering::SeqCst);
                let config = config.clone();
                let active = Arc::clone(&active);
                let shutdown_seen = Arc::clone(&shutdown_seen);
                thread::spawn(move || {
                    let result = serve_stream(&config, stream, &shutdown_seen);
                    if let Err(e) = result {
                        log::warn!("session with {peer} ended: {e}");
                    }
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if shutdown_seen.load(Ordering::SeqCst) && active.load(Ordering::SeqCst) == 0 {
                    return Ok(());
                }
                thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(e),
        }
    }
}

fn serve_stream(
    config: &ReferenceWorkerConfig,
    stream: TcpStream,
    shutdown_seen: &AtomicBool,
) -> io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    let mut session = Session::new(config);
    let mut out = stream;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match session.handle_line(&line) {
            Step::Reply(frame) => {
                writeln!(out, "{}", frame.to_line())?;
                out.flush()?;
            }
            Step::Silent => {}
            Step::Stop => {
                shutdown_seen.store(true, Ordering::SeqCst);
                break;
            }
        }
    }
    Ok(())
}

/// Runs a reference worker on stdio or TCP. Returns the process exit code.
pub fn run_reference_worker(config: &ReferenceWorkerConfig, transport: &WorkerTransport) -> i32 {
    let result = match transport {
        WorkerTransport::Stdio => {
            let stdin = io::stdin();
            let stdout = io::stdout();
            serve(config, stdin.lock(), stdout.lock())
        }
        WorkerTransport::Tcp(port) => {
            TcpListener::bind(("127.0.0.1", *port)).and_then(|listener| {
                eprintln!("listening on {}", listener.local_addr()?);
                serve_tcp(config, listener)
            })
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("worker transport failure: {e}");
            1
        }
    }
}

/// Serves a reference worker on a thread in this process and returns the
/// engine-side streams.
pub fn spawn_in_process(config: ReferenceWorkerConfig) -> WorkerStreams {
    let (engine_reader, worker_writer) = io::pipe().expect("pipe");
    let (worker_reader, engine_writer) = io::pipe().expect("pipe");
    let thread = thread::Builder::new()
        .name(format!("ref-{}", config.name))
        .spawn(move || {
            if let Err(e) = serve(&config, BufReader::new(worker_reader), worker_writer) {
                log::debug!("in-process worker ended: {e}");
            }
        })
        .expect("spawn worker thread");
    WorkerStreams {
        reader: Box::new(engine_reader),
        writer: Box::new(engine_writer),
        thread: Some(thread),
    }
}

/// Serves a reference worker in-process and completes the handshake.
pub fn connect_in_process(
    config: ReferenceWorkerConfig,
    catalog: &ClassCatalog,
    format: ImageFormat,
) -> Result<WorkerHandle, ProtocolError> {
    let role = config.role.protocol_role();
    let label = format!("in-process {}", config.name);
    WorkerHandle::connect_streams(
        spawn_in_process(config),
        role,
        Arc::new(catalog.clone()),
        format,
        Timeouts::default(),
        FramingPolicy::Strict,
        label,
    )
}
