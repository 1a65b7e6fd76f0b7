use anyhow::Result;
use valigen_core::protocol::ImageFormat;
use valigen_core::run_dir::{AttemptLine, RunDirectory};
use valigen_core::validation::{batch_generate_validated, Outcome};
use valigen_core::RunManifest;

use super::{close_pool, load_config, open_pool};
use crate::GenArgs;

pub(super) fn gen(a: GenArgs) -> Result<i32> {
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.loop_cfg.base_seed = seed;
    }
    if let Some(budget) = a.retry_budget {
        cfg.loop_cfg.retry_budget = budget;
    }
    cfg.validate()?;
    anyhow::ensure!(a.count >= 1, "--count must be at least 1");
    let catalog = cfg.catalog()?;
    let class = catalog.lookup(&a.class)?;
    let class_name = catalog.name(class).to_string();

    let manifest = RunManifest::new(
        cfg.canonical_json(),
        cfg.loop_cfg.base_seed,
        catalog.digest().to_string(),
    );
    let mut run = RunDirectory::create(cfg.resolve_out(&a.out), manifest)?;
    let format = ImageFormat::png(cfg.loop_cfg.width, cfg.loop_cfg.height);
    let mut pool = open_pool(&cfg, &catalog, &format, a.workers, &mut run)?;
    let results = batch_generate_validated(&mut pool, &[(class, a.count)], &cfg.loop_cfg);
    close_pool(&mut pool);
    let results = results?;

    let mut lines = Vec::new();
    let (mut accepted, mut exhausted, mut failed) = (0usize, 0usize, 0usize);
    for r in &results {
        let (target, item, attempts) = match r {
            Ok(v) => (v.target, v.item_index, &v.attempts),
            Err(e) => (e.target, e.item_index, &e.attempts),
        };
        for att in attempts {
            lines.push(AttemptLine::new(
                target,
                item,
                att.attempt_index,
                att.seed,
                &att.verdict,
                att.accepted,
            ));
            if let Some(discarded) = &att.discarded_image {
                run.write_audit(
                    target,
                    &class_name,
                    item,
                    att.attempt_index,
                    &discarded.image,
                )?;
            }
        }
        match r {
            Ok(v) if v.outcome == Outcome::Accepted => {
                let sample = v
                    .sample
                    .as_ref()
                    .expect("accepted result carries its image");
                let attempt = v
                    .accepted_attempt()
                    .expect("accepted attempt")
                    .attempt_index;
                run.write_image(target, &class_name, item, attempt, &sample.image)?;
                accepted += 1;
            }
            Ok(_) => exhausted += 1,
            Err(e) => {
                eprintln!("error: {e}");
                failed += 1;
            }
        }
    }
    run.write_attempts(lines)?;
    println!(
        "class {class} ({class_name}): {accepted} accepted, {exhausted} budget exhausted, {failed} failed"
    );
    if failed > 0 {
        return Ok(1);
    }
    run.finalize()?;
    Ok(0)
}
