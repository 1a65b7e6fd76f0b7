use anyhow::Result;

use crate::{Command, WorkerCommand};

mod data;
mod eval;
mod gen;
mod report;
mod worker;

pub(crate) fn run(command: Command) -> Result<i32> {
    match command {
        Command::Split(a) => data::split(a),
        Command::Augment(a) => data::augment(a),
        Command::Gen(a) => gen::gen(a),
        Command::Eval(a) => eval::eval(a),
        Command::Report(a) => report::report(a),
        Command::Compare(a) => report::compare(a),
        Command::Worker(WorkerCommand::Conformance(a)) => worker::conformance(a),
        Command::Worker(WorkerCommand::Reference(a)) => worker::reference(a),
    }
}

use std::path::Path;

use anyhow::Context;
use valigen_core::config::EngineConfig;
use valigen_core::pool::{spawn_pairs, WorkerPair};
use valigen_core::protocol::ImageFormat;
use valigen_core::run_dir::RunDirectory;
use valigen_core::ClassCatalog;

pub(crate) fn load_config(path: &Path) -> Result<EngineConfig> {
    let cfg =
        EngineConfig::load(path).with_context(|| format!("loading config {}", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Spawns the pool and records the worker identities in the run manifest.
pub(crate) fn open_pool(
    cfg: &EngineConfig,
    catalog: &ClassCatalog,
    format: &ImageFormat,
    workers: usize,
    run: &mut RunDirectory,
) -> Result<Vec<WorkerPair>> {
    anyhow::ensure!(workers >= 1, "--workers must be at least 1");
    let pool = spawn_pairs(&cfg.generator, &cfg.validator, catalog, format, workers)?;
    let generator = pool[0].generator.identity().clone();
    let validator = pool[0].validator.identity().clone();
    run.update_manifest(|m| {
        m.generator_identity = Some(generator);
        m.validator_identity = Some(validator);
    })?;
    Ok(pool)
}

pub(crate) fn close_pool(pool: &mut [WorkerPair]) {
    for pair in pool {
        pair.shutdown();
    }
}
