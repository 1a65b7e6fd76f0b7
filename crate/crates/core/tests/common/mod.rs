#![allow(dead_code)]

use std::io::{self, BufRead, BufReader, Write};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use valigen_core::protocol::{
    Frame, FramingPolicy, ImageFormat, ProtocolError, Role, Timeouts, WorkerStreams,
};
use valigen_core::{ClassCatalog, WorkerHandle};

/// Worker side of an in-process connection.
pub struct Peer {
    pub reader: Box<dyn BufRead + Send>,
    pub writer: Box<dyn Write + Send>,
}

impl Peer {
    /// Next frame from the engine, or `None` at end of stream.
    pub fn recv(&mut self) -> Option<Frame> {
        loop {
            let mut line = String::new();
            if self.reader.read_line(&mut line).ok()? == 0 {
                return None;
            }
            if let Ok(f) = Frame::parse(line.trim_end()) {
                return Some(f);
            }
        }
    }

    pub fn send_raw(&mut self, line: &str) {
        let _ = writeln!(self.writer, "{line}");
        let _ = self.writer.flush();
    }

    pub fn send(&mut self, frame: &Frame) {
        self.send_raw(&frame.to_line());
    }

    /// Answers `init` with a matching `ready`.
    pub fn handshake(&mut self) -> Frame {
        let init = self.recv().expect("init frame");
        let Frame::Init {
            role,
            catalog_digest,
            ..
        } = &init
        else {
            panic!("expected init, got {init:?}");
        };
        self.send(&Frame::Ready {
            name: "fake".into(),
            version_tag: "F1".into(),
            checkpoint_step: Some(7),
            role: Some(*role),
            catalog_digest: Some(catalog_digest.clone()),
        });
        init
    }

    /// Blocks until the engine closes its side.
    pub fn drain(&mut self) {
        while self.recv().is_some() {}
    }
}

/// Starts `script` on a thread as the worker end of a pipe pair.
pub fn fake_streams(script: impl FnOnce(Peer) + Send + 'static) -> WorkerStreams {
    let (engine_reader, worker_writer) = io::pipe().expect("pipe");
    let (worker_reader, engine_writer) = io::pipe().expect("pipe");
    let thread = thread::spawn(move || {
        script(Peer {
            reader: Box::new(BufReader::new(worker_reader)),
            writer: Box::new(worker_writer),
        })
    });
    WorkerStreams {
        reader: Box::new(engine_reader),
        writer: Box::new(engine_writer),
        thread: Some(thread),
    }
}

pub fn short_timeouts(ms: u64) -> Timeouts {
    let d = Duration::from_millis(ms);
    Timeouts {
        generate: d,
        classify: d,
        handshake: d,
        shutdown: d,
    }
}

pub fn connect_fake(
    role: Role,
    catalog: &ClassCatalog,
    format: ImageFormat,
    timeouts: Timeouts,
    script: impl FnOnce(Peer) + Send + 'static,
) -> Result<WorkerHandle, ProtocolError> {
    WorkerHandle::connect_streams(
        fake_streams(script),
        role,
        Arc::new(catalog.clone()),
        format,
        timeouts,
        FramingPolicy::Strict,
        "fake",
    )
}

use valigen_core::pool::WorkerPair;
use valigen_core::reference::{connect_in_process, ReferenceWorkerConfig};

/// `size` in-process reference pairs built from the two configs.
pub fn in_process_pool(
    generator: &ReferenceWorkerConfig,
    validator: &ReferenceWorkerConfig,
    catalog: &ClassCatalog,
    format: &ImageFormat,
    size: usize,
) -> Vec<WorkerPair> {
    (0..size)
        .map(|_| {
            WorkerPair::new(
                connect_in_process(generator.clone(), catalog, format.clone()).unwrap(),
                connect_in_process(validator.clone(), catalog, format.clone()).unwrap(),
            )
            .unwrap()
        })
        .collect()
}
