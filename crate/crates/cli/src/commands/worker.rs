use anyhow::{anyhow, bail, Result};
use valigen_core::protocol::conformance_check;
use valigen_core::reference::{
    run_reference_worker, FidelityParams, ReferenceWorkerConfig, StubPolicy, WorkerTransport,
};

use super::load_config;
use crate::{ConformanceArgs, ReferenceArgs, ReferenceKind, WhichWorker};

pub(super) fn conformance(a: ConformanceArgs) -> Result<i32> {
    let cfg = load_config(&a.config)?;
    let catalog = cfg.catalog()?;
    let mut specs = Vec::new();
    if a.role != WhichWorker::Validator {
        specs.push(&cfg.generator);
    }
    if a.role != WhichWorker::Generator {
        specs.push(&cfg.validator);
    }
    let mut ok = true;
    for spec in specs {
        let report = conformance_check(spec, &catalog);
        print!("{}", report.render());
        ok &= report.passed();
    }
    Ok(if ok { 0 } else { 1 })
}

pub(super) fn reference(a: ReferenceArgs) -> Result<i32> {
    let transport: WorkerTransport = a.transport.parse().map_err(|e: String| anyhow!(e))?;
    let mut config = match a.role {
        ReferenceKind::Generator => {
            ReferenceWorkerConfig::generator(FidelityParams::new(a.fidelity, a.error_rate)?)
        }
        ReferenceKind::Validator => ReferenceWorkerConfig::centroid(),
        ReferenceKind::Stub => {
            let policy = match (&a.stub_matrix, a.stub_diagonal) {
                (Some(path), _) => StubPolicy::load_csv(path)?,
                (None, Some(p)) => {
                    if !(0.0..=1.0).contains(&p) || a.classes < 2 {
                        bail!("--stub-diagonal needs p in [0,1] and --classes >= 2");
                    }
                    StubPolicy::with_diagonal(a.classes, p)
                }
                (None, None) => StubPolicy::identity(a.classes),
            };
            ReferenceWorkerConfig::stub(policy, a.seed)
        }
    };
    if let Some(name) = a.name {
        config.name = name;
    }
    if let Some(tag) = a.version_tag {
        config.version_tag = tag;
    }
    config.checkpoint_step = a.checkpoint_step;
    Ok(run_reference_worker(&config, &transport))
}
