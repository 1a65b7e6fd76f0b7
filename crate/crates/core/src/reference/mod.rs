//! Deterministic reference workers.
//!
//! A procedural texture generator with a fidelity knob and error injection,
//! a nearest-centroid validator, and a stub validator that samples
//! predictions from a configured confusion matrix. They are deliberately
//! simple so that loop and evaluation statistics can be predicted in closed
//! form. All three can be served over the worker protocol, either in this
//! process or as a standalone worker.

mod centroid;
mod serve;
mod stub;
mod texture;

pub use centroid::{
    centroid_classify, centroid_classify_k, mean_rgb_excluding_tag, SOFTMAX_TEMPERATURE,
};
pub use serve::{
    connect_in_process, run_reference_worker, serve, serve_tcp, spawn_in_process, ReferenceRole,
    ReferenceWorkerConfig, WorkerTransport,
};
pub use stub::{stub_classify, StubPolicy, StubValidator};
pub use texture::{
    read_tag, render_texture, texture_generate, FidelityParams, TextureRecipe, PALETTE, TAG_SIDE,
};
