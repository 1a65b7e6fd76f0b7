use std::sync::Arc;

use super::handle::{spawn_worker_with, FramingPolicy, ShutdownOutcome, WorkerHandle};
use super::messages::ImageFormat;
use super::{EndpointSpec, ProtocolError, Role};
use crate::catalog::ClassCatalog;
use crate::image::ImageBuffer;
use crate::manifest::WorkerIdentity;
use crate::reference::{render_texture, FidelityParams, PALETTE};

const PROBE_SIDE: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
    Skip,
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Warn => "warn",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "skip",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformanceCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ConformanceReport {
    pub role: Role,
    pub identity: Option<WorkerIdentity>,
    pub checks: Vec<ConformanceCheck>,
}

impl ConformanceReport {
    /// No check failed (warnings allowed).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn status_of(&self, name: &str) -> Option<CheckStatus> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.status)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{} worker {}\n",
            self.role,
            self.identity
                .as_ref()
                .map(|i| i.to_string())
                .unwrap_or_else(|| "<no handshake>".into())
        );
        for c in &self.checks {
            out.push_str(&format!("  {:<20} {:<4}  {}\n", c.name, c.status, c.detail));
        }
        out
    }
}

struct Checks(Vec<ConformanceCheck>);

impl Checks {
    fn push(&mut self, name: &'static str, status: CheckStatus, detail: impl Into<String>) {
        self.0.push(ConformanceCheck {
            name,
            status,
            detail: detail.into(),
        });
    }
}

/// Runs the scripted conformance exchange against the worker in `spec`.
/// Failures are report entries, never errors.
pub fn conformance_check(spec: &EndpointSpec, catalog: &ClassCatalog) -> ConformanceReport {
    let spec = spec.clone();
    conformance_check_with(spec.role, catalog, move |catalog, format, framing| {
        spawn_worker_with(&spec, catalog, format, framing)
    })
}

/// Like [`conformance_check`] with a caller-supplied connector.
pub fn conformance_check_with<F>(
    role: Role,
    catalog: &ClassCatalog,
    connect: F,
) -> ConformanceReport
where
    F: FnOnce(Arc<ClassCatalog>, ImageFormat, FramingPolicy) -> Result<WorkerHandle, ProtocolError>,
{
    let mut checks = Checks(Vec::new());
    let format = ImageFormat::png(PROBE_SIDE, PROBE_SIDE);
    let mut handle = match connect(Arc::new(catalog.clone()), format, FramingPolicy::Lenient) {
        Ok(h) => {
            checks.push(
                "handshake",
                CheckStatus::Pass,
                format!("ready from {}", h.identity()),
            );
            h
        }
        Err(e) => {
            checks.push("handshake", CheckStatus::Fail, e.to_string());
            for name in [
                "requests",
                "determinism",
                "malformed_tolerance",
                "framing",
                "accounting",
                "shutdown",
            ] {
                checks.push(name, CheckStatus::Skip, "no handshake");
            }
            return ConformanceReport {
                role,
                identity: None,
                checks: checks.0,
            };
        }
    };
    let identity = Some(handle.identity().clone());

    let probe = match role {
        Role::Generator => generator_requests(&mut handle),
        Role::Validator => validator_requests(&mut handle),
    };
    match probe {
        Ok(repeat_matches) => {
            checks.push("requests", CheckStatus::Pass, "3/3 requests answered");
            if repeat_matches {
                checks.push(
                    "determinism",
                    CheckStatus::Pass,
                    "repeated request reproduced",
                );
            } else {
                checks.push(
                    "determinism",
                    CheckStatus::Warn,
                    "repeated request gave a different result",
                );
            }
        }
        Err(e) => {
            checks.push("requests", CheckStatus::Fail, e.to_string());
            checks.push("determinism", CheckStatus::Skip, "requests failed");
        }
    }

    match malformed_probe(&mut handle, role) {
        Ok(()) => checks.push(
            "malformed_tolerance",
            CheckStatus::Pass,
            "error replies, worker stayed alive",
        ),
        Err(detail) => checks.push("malformed_tolerance", CheckStatus::Fail, detail),
    }

    let stats = handle.stats();
    if stats.framing_violations == 0 {
        checks.push("framing", CheckStatus::Pass, "every line was a valid frame");
    } else {
        checks.push(
            "framing",
            CheckStatus::Fail,
            format!("{} line(s) were not valid frames", stats.framing_violations),
        );
    }
    if role == Role::Validator && stats.pred_overrides > 0 {
        checks.push(
            "pred_consistency",
            CheckStatus::Warn,
            format!(
                "{} verdict(s) had pred != argmax(probs)",
                stats.pred_overrides
            ),
        );
    }
    if stats.balanced() {
        checks.push(
            "accounting",
            CheckStatus::Pass,
            format!("{} requests, one terminal reply each", stats.sent),
        );
    } else {
        checks.push("accounting", CheckStatus::Fail, format!("{stats:?}"));
    }

    match handle.shutdown_with_outcome() {
        ShutdownOutcome::Exited(Some(0)) | ShutdownOutcome::Closed => {
            checks.push("shutdown", CheckStatus::Pass, "clean exit")
        }
        ShutdownOutcome::Exited(code) => checks.push(
            "shutdown",
            CheckStatus::Fail,
            format!("exit status {code:?}"),
        ),
        ShutdownOutcome::Killed => {
            checks.push("shutdown", CheckStatus::Fail, "ignored shutdown; killed")
        }
        ShutdownOutcome::Detached => {
            checks.push("shutdown", CheckStatus::Fail, "did not stop in time")
        }
        ShutdownOutcome::AlreadyClosed => {
            checks.push("shutdown", CheckStatus::Fail, "connection already closed")
        }
    }

    ConformanceReport {
        role,
        identity,
        checks: checks.0,
    }
}

/// Three generate requests; the third repeats the first. Returns whether the
/// repeat reproduced the same pixels.
fn generator_requests(h: &mut WorkerHandle) -> Result<bool, ProtocolError> {
    let last = h.catalog().k() - 1;
    let a = h.request_generate(0, 1, PROBE_SIDE, PROBE_SIDE)?;
    h.request_generate(last, 2, PROBE_SIDE, PROBE_SIDE)?;
    let c = h.request_generate(0, 1, PROBE_SIDE, PROBE_SIDE)?;
    Ok(a.image == c.image)
}

fn probe_image(k: usize, class: usize, seed: u64) -> ImageBuffer {
    let k = k.min(PALETTE.len());
    render_texture(
        k,
        class % k,
        seed,
        PROBE_SIDE,
        PROBE_SIDE,
        FidelityParams::perfect(),
    )
    .0
}

fn validator_requests(h: &mut WorkerHandle) -> Result<bool, ProtocolError> {
    let k = h.catalog().k();
    let first = probe_image(k, 0, 1);
    let a = h.request_classify(&first)?;
    h.request_classify(&probe_image(k, k - 1, 2))?;
    let c = h.request_classify(&first)?;
    Ok(a == c)
}

fn malformed_probe(h: &mut WorkerHandle, role: Role) -> Result<(), String> {
    let timeout = match role {
        Role::Generator => h.timeouts().generate,
        Role::Validator => h.timeouts().classify,
    };
    let probes: [fn(u64, Role) -> String; 2] = [
        |_, _| "this is not json".to_string(),
        |id, role| match role {
            Role::Generator => format!(r#"{{"type":"generate","id":{id}}}"#),
            Role::Validator => format!(r#"{{"type":"classify","id":{id}}}"#),
        },
    ];
    for probe in probes {
        let id = h.reserve_id();
        let line = probe(id, role);
        match h.send_raw_request(id, line.clone(), timeout) {
            Err(ProtocolError::WorkerError { .. }) => {}
            Err(e) => return Err(format!("probe {line:?}: expected an error reply, got {e}")),
            Ok(frame) => {
                return Err(format!(
                    "probe {line:?}: expected an error reply, got `{}`",
                    frame.kind()
                ))
            }
        }
    }
    let alive = match role {
        Role::Generator => h.request_generate(0, 3, PROBE_SIDE, PROBE_SIDE).map(|_| ()),
        Role::Validator => {
            let img = probe_image(h.catalog().k(), 0, 3);
            h.request_classify(&img).map(|_| ())
        }
    };
    alive.map_err(|e| format!("worker unusable after malformed frames: {e}"))
}
