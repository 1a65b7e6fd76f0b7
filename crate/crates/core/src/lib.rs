//! Engine for classifier-gated synthetic image generation.
//!
//! A generator worker and a validator worker are driven over a line-delimited
//! JSON protocol. Generated images are kept only when the validator assigns
//! them the class they were prompted with; everything else is discarded and
//! regenerated with a fresh seed. The rest of the crate prepares labeled
//! data for the validator and measures the generator by its first attempts.

pub mod catalog;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod image;
pub mod manifest;
pub mod pool;
pub mod protocol;
pub mod reference;
pub mod rng;
pub mod run_dir;
pub mod validation;

pub use catalog::{ClassCatalog, ClassDef};
pub use error::{Error, Result};
pub use image::{ImageBuffer, ImageSample, SampleSource};
pub use manifest::{RunManifest, WorkerIdentity};
pub use protocol::{EndpointSpec, Role, Verdict, WorkerHandle};
