use anyhow::Result;
use valigen_core::evaluation::evaluate_first_attempt;
use valigen_core::protocol::ImageFormat;
use valigen_core::run_dir::{AttemptLine, RunDirectory};
use valigen_core::RunManifest;

use super::{close_pool, load_config, open_pool};
use crate::EvalArgs;

pub(super) fn eval(a: EvalArgs) -> Result<i32> {
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.eval.base_seed = seed;
    }
    if let Some(n) = a.n_per_class {
        cfg.eval.n_per_class = n;
    }
    cfg.validate()?;
    let catalog = cfg.catalog()?;

    let manifest = RunManifest::new(
        cfg.canonical_json(),
        cfg.eval.base_seed,
        catalog.digest().to_string(),
    );
    let mut run = RunDirectory::create(cfg.resolve_out(&a.out), manifest)?;
    let format = ImageFormat::png(cfg.eval.width, cfg.eval.height);
    let mut pool = open_pool(&cfg, &catalog, &format, a.workers, &mut run)?;
    let result = evaluate_first_attempt(&mut pool, &catalog, &cfg.eval, run.manifest());
    close_pool(&mut pool);
    let evaluation = result?;

    let mut lines = Vec::new();
    for cell in &evaluation.cells {
        if let Some(sample) = &cell.sample {
            run.write_image(
                cell.class_id,
                catalog.name(cell.class_id),
                cell.item_index,
                1,
                &sample.image,
            )?;
        }
        if let Some(v) = &cell.verdict {
            lines.push(AttemptLine::new(
                cell.class_id,
                cell.item_index,
                1,
                cell.seed,
                v,
                v.pred() == cell.class_id,
            ));
        }
        if let Some(e) = &cell.error {
            eprintln!("class {} item {}: {e}", cell.class_id, cell.item_index);
        }
    }
    run.write_attempts(lines)?;
    let report = &evaluation.report;
    run.write_report(report, a.transpose)?;
    println!(
        "macro precision {:.6}  recall {:.6}  f1 {:.6}",
        report.macro_precision(),
        report.macro_recall(),
        report.macro_f1()
    );
    if !report.complete() {
        eprintln!(
            "evaluation incomplete: {} cells failed",
            report.errors.len()
        );
        return Ok(1);
    }
    run.finalize()?;
    Ok(0)
}
