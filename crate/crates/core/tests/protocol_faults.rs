//! Misbehaving workers: every failure must surface as a typed error within
//! its timeout, and every request must end in exactly one terminal outcome.

mod common;

use std::net::TcpListener;
use std::thread;
use std::time::{Duration, Instant};

use common::{connect_fake, short_timeouts, Peer};
use valigen_core::protocol::{
    spawn_worker, EndpointSpec, Frame, ImageFormat, ProtocolError, Role, ShutdownOutcome,
};
use valigen_core::reference::{serve_tcp, texture_generate, FidelityParams, ReferenceWorkerConfig};
use valigen_core::{ClassCatalog, ImageBuffer};

fn catalog() -> ClassCatalog {
    ClassCatalog::default_catalog()
}

fn probe() -> ImageBuffer {
    texture_generate(2, 1, 16, 16, FidelityParams::perfect())
}

fn fmt() -> ImageFormat {
    ImageFormat::png(16, 16)
}

fn uniform_verdict(id: u64) -> Frame {
    Frame::Verdict {
        id,
        probs: vec![1.0 / 9.0; 9],
        pred: 0,
    }
}

/// Validator that answers each classify request via `reply`.
fn validator(
    reply: impl Fn(&mut Peer, u64) + Send + 'static,
) -> impl FnOnce(Peer) + Send + 'static {
    move |mut peer: Peer| {
        peer.handshake();
        while let Some(frame) = peer.recv() {
            match frame {
                Frame::Classify { id, .. } => reply(&mut peer, id),
                Frame::Shutdown => return,
                _ => {}
            }
        }
    }
}

#[test]
fn garbage_line_is_a_framing_error() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        validator(|p, _| p.send_raw("%%% not json")),
    )
    .unwrap();
    let err = h.request_classify(&probe()).unwrap_err();
    assert!(matches!(err, ProtocolError::Framing { .. }), "{err:?}");
    let s = h.stats();
    assert_eq!(s.framing_violations, 1);
    assert!(s.balanced(), "{s:?}");
}

#[test]
fn reply_with_future_id_is_rejected() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        validator(|p, id| p.send(&uniform_verdict(id + 5))),
    )
    .unwrap();
    let err = h.request_classify(&probe()).unwrap_err();
    assert!(
        matches!(err, ProtocolError::UnexpectedId { got, expected } if got == expected + 5),
        "{err:?}"
    );
    assert!(h.stats().balanced());
}

#[test]
fn stale_reply_is_dropped_and_request_completes() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        validator(|p, id| {
            p.send(&uniform_verdict(id.wrapping_sub(1)));
            p.send(&uniform_verdict(id));
        }),
    )
    .unwrap();
    let v = h.request_classify(&probe()).unwrap();
    assert_eq!(v.pred(), 0);
    let s = h.stats();
    assert_eq!((s.sent, s.responses, s.stale_replies), (1, 1, 1));
}

#[test]
fn silence_times_out_without_hanging() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(300),
        validator(|_, _| {}),
    )
    .unwrap();
    let t = Instant::now();
    let err = h.request_classify(&probe()).unwrap_err();
    let took = t.elapsed();
    assert!(err.is_timeout(), "{err:?}");
    assert!(
        took >= Duration::from_millis(300) && took < Duration::from_millis(1300),
        "{took:?}"
    );
    let s = h.stats();
    assert_eq!(s.timeouts, 1);
    assert!(s.balanced());
}

#[test]
fn late_reply_after_timeout_is_stale_for_next_request() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(200),
        validator(|p, id| {
            if id == 1 {
                thread::sleep(Duration::from_millis(400));
            }
            p.send(&uniform_verdict(id));
        }),
    )
    .unwrap();
    assert!(h.request_classify(&probe()).unwrap_err().is_timeout());
    thread::sleep(Duration::from_millis(300));
    h.request_classify(&probe()).unwrap();
    let s = h.stats();
    assert_eq!(
        (s.sent, s.timeouts, s.responses, s.stale_replies),
        (2, 1, 1, 1)
    );
    assert!(s.balanced());
}

#[test]
fn worker_errors_are_typed() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        validator(|p, id| {
            if id == 1 {
                p.send(&Frame::error(Some(id), "oom", "out of memory"));
            } else {
                p.send(&Frame::error(None, "fatal", "giving up"));
            }
        }),
    )
    .unwrap();
    match h.request_classify(&probe()).unwrap_err() {
        ProtocolError::WorkerError { id, code, .. } => {
            assert_eq!(id, Some(1));
            assert_eq!(code, "oom");
        }
        e => panic!("{e:?}"),
    }
    assert!(matches!(
        h.request_classify(&probe()).unwrap_err(),
        ProtocolError::WorkerError { id: None, .. }
    ));
    let s = h.stats();
    assert_eq!(s.error_replies, 2);
    assert!(s.balanced());
}

#[test]
fn bad_probability_vector_is_rejected() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        validator(|p, id| {
            p.send(&Frame::Verdict {
                id,
                probs: vec![0.5; 9],
                pred: 0,
            })
        }),
    )
    .unwrap();
    assert!(matches!(
        h.request_classify(&probe()).unwrap_err(),
        ProtocolError::BadProbabilities(_)
    ));
}

#[test]
fn claimed_pred_is_overridden_by_argmax() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        validator(|p, id| {
            let mut probs = vec![0.0; 9];
            probs[4] = 1.0;
            p.send(&Frame::Verdict { id, probs, pred: 1 })
        }),
    )
    .unwrap();
    assert_eq!(h.request_classify(&probe()).unwrap().pred(), 4);
    assert_eq!(h.stats().pred_overrides, 1);
}

#[test]
fn worker_exit_mid_request_is_closed() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        |mut p| {
            p.handshake();
            let _ = p.recv();
        },
    )
    .unwrap();
    let t = Instant::now();
    assert!(matches!(
        h.request_classify(&probe()).unwrap_err(),
        ProtocolError::Closed
    ));
    assert!(t.elapsed() < Duration::from_millis(1500));
    assert!(h.stats().balanced());
}

#[test]
fn wrong_image_size_from_generator() {
    let mut h = connect_fake(
        Role::Generator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        |mut p| {
            p.handshake();
            while let Some(f) = p.recv() {
                if let Frame::Generate { id, .. } = f {
                    let img = texture_generate(0, 0, 8, 8, FidelityParams::perfect());
                    let png = valigen_core::dataset::encode_image(&img);
                    use base64::Engine;
                    p.send(&Frame::Image {
                        id,
                        png_b64: base64::engine::general_purpose::STANDARD.encode(png),
                    });
                }
            }
        },
    )
    .unwrap();
    assert!(matches!(
        h.request_generate(0, 1, 16, 16).unwrap_err(),
        ProtocolError::DimensionMismatch { .. }
    ));
}

#[test]
fn catalog_mismatch_fails_handshake() {
    let err = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        |mut p| {
            let _ = p.recv();
            p.send(&Frame::Ready {
                name: "x".into(),
                version_tag: "V1".into(),
                checkpoint_step: None,
                role: Some(Role::Validator),
                catalog_digest: Some("0".repeat(64)),
            });
            p.drain();
        },
    )
    .unwrap_err();
    assert!(
        matches!(err, ProtocolError::CatalogMismatch { .. }),
        "{err:?}"
    );
}

#[test]
fn role_mismatch_fails_handshake() {
    let err = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(2000),
        |mut p| {
            let _ = p.recv();
            p.send(&Frame::Ready {
                name: "x".into(),
                version_tag: "V1".into(),
                checkpoint_step: None,
                role: Some(Role::Generator),
                catalog_digest: None,
            });
            p.drain();
        },
    )
    .unwrap_err();
    assert!(matches!(err, ProtocolError::RoleMismatch { .. }), "{err:?}");
}

#[test]
fn silent_handshake_times_out() {
    let t = Instant::now();
    let err = connect_fake(
        Role::Generator,
        &catalog(),
        fmt(),
        short_timeouts(250),
        |mut p| p.drain(),
    )
    .unwrap_err();
    assert!(matches!(err, ProtocolError::HandshakeTimeout(_)), "{err:?}");
    assert!(t.elapsed() < Duration::from_millis(1500));
}

#[test]
fn hung_in_process_worker_is_detached_on_shutdown() {
    let mut h = connect_fake(
        Role::Validator,
        &catalog(),
        fmt(),
        short_timeouts(200),
        |mut p| {
            p.handshake();
            thread::sleep(Duration::from_secs(2));
        },
    )
    .unwrap();
    let t = Instant::now();
    assert_eq!(h.shutdown_with_outcome(), ShutdownOutcome::Detached);
    assert!(t.elapsed() < Duration::from_millis(1000));
    assert_eq!(h.shutdown_with_outcome(), ShutdownOutcome::AlreadyClosed);
    assert!(matches!(
        h.request_classify(&probe()).unwrap_err(),
        ProtocolError::Closed
    ));
}

#[cfg(unix)]
mod subprocess {
    use super::*;

    fn sh(script: &str, role: Role, timeout: f64) -> EndpointSpec {
        EndpointSpec::subprocess(role, ["sh", "-c", script]).with_all_timeouts(timeout)
    }

    const READY: &str = r#"echo '{"type":"ready","name":"sh","version_tag":"S1"}'"#;

    #[test]
    fn hung_subprocess_is_killed_after_shutdown_timeout() {
        let spec = sh(
            &format!("read l; {READY}; trap '' TERM; while true; do sleep 1; done"),
            Role::Validator,
            0.3,
        );
        let mut h = spawn_worker(&spec, &catalog(), fmt()).unwrap();
        assert_eq!(h.identity().version_tag, "S1");
        let t = Instant::now();
        assert_eq!(h.shutdown_with_outcome(), ShutdownOutcome::Killed);
        assert!(
            t.elapsed() < Duration::from_millis(1500),
            "{:?}",
            t.elapsed()
        );
        assert_eq!(h.shutdown_with_outcome(), ShutdownOutcome::AlreadyClosed);
    }

    #[test]
    fn cooperative_subprocess_exits_cleanly() {
        let spec = sh(
            &format!("read l; {READY}; read l; exit 0"),
            Role::Validator,
            2.0,
        );
        let mut h = spawn_worker(&spec, &catalog(), fmt()).unwrap();
        assert_eq!(h.shutdown_with_outcome(), ShutdownOutcome::Exited(Some(0)));
    }

    #[test]
    fn garbage_subprocess_fails_handshake() {
        let spec = sh("read l; echo garbage; sleep 5", Role::Generator, 2.0);
        let t = Instant::now();
        let err = spawn_worker(&spec, &catalog(), fmt()).unwrap_err();
        assert!(matches!(err, ProtocolError::Framing { .. }), "{err:?}");
        assert!(t.elapsed() < Duration::from_secs(2));
    }

    #[test]
    fn missing_program_is_a_spawn_error() {
        let spec = EndpointSpec::subprocess(Role::Generator, ["/nonexistent/worker-binary"]);
        assert!(matches!(
            spawn_worker(&spec, &catalog(), fmt()).unwrap_err(),
            ProtocolError::Spawn { .. }
        ));
    }
}

#[test]
fn tcp_transport_round_trip() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || serve_tcp(&ReferenceWorkerConfig::centroid(), listener));
    let spec = EndpointSpec::tcp(Role::Validator, addr.to_string()).with_all_timeouts(5.0);
    let mut h = spawn_worker(&spec, &catalog(), fmt()).unwrap();
    let v = h.request_classify(&probe()).unwrap();
    assert_eq!(v.pred(), 2);
    assert_eq!(h.shutdown_with_outcome(), ShutdownOutcome::Closed);
    server.join().unwrap().unwrap();
}

#[test]
fn tcp_connect_refused_is_typed() {
    let addr = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let spec = EndpointSpec::tcp(Role::Validator, addr.to_string()).with_all_timeouts(1.0);
    assert!(matches!(
        spawn_worker(&spec, &catalog(), fmt()).unwrap_err(),
        ProtocolError::Connect { .. }
    ));
}
