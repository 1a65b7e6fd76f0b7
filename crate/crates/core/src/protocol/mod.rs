//! Line-delimited JSON protocol between the engine and its workers.
//!
//! Each frame is one JSON object on one line. The engine opens with `init`,
//! the worker answers `ready`, and after that the engine issues `generate`
//! or `classify` requests one at a time, matching replies by `id`. Images
//! travel as base64 PNG.

mod conformance;
mod endpoint;
mod error;
mod handle;
mod messages;
mod verdict;

pub use conformance::{
    conformance_check, conformance_check_with, CheckStatus, ConformanceCheck, ConformanceReport,
};
pub use endpoint::{EndpointSpec, Role, Timeouts, Transport};
pub use error::ProtocolError;
pub use handle::{
    spawn_worker, spawn_worker_with, FramingPolicy, RequestStats, ShutdownOutcome, WorkerHandle,
    WorkerStreams,
};
pub use messages::{Frame, ImageFormat, PROTOCOL_VERSION};
pub use verdict::{Verdict, PROB_SUM_TOLERANCE};

use base64::Engine as _;

use crate::dataset::{decode_image, encode_image};
use crate::image::ImageBuffer;

pub(crate) fn image_to_b64(img: &ImageBuffer) -> String {
    base64::engine::general_purpose::STANDARD.encode(encode_image(img))
}

pub(crate) fn image_from_b64(text: &str) -> Result<ImageBuffer, String> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(text.trim())
        .map_err(|e| format!("bad base64: {e}"))?;
    decode_image(&bytes).map_err(|e| e.to_string())
}
