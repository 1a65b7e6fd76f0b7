//! The validation loop and first-attempt evaluation driven end to end over
//! in-process reference workers.

mod common;

use common::in_process_pool;
use valigen_core::evaluation::{evaluate_first_attempt, EvalConfig, EvalReport};
use valigen_core::protocol::ImageFormat;
use valigen_core::reference::{FidelityParams, ReferenceWorkerConfig, StubPolicy};
use valigen_core::run_dir::RunDirectory;
use valigen_core::validation::{batch_generate_validated, LoopConfig, Outcome};
use valigen_core::{ClassCatalog, RunManifest};

const SIDE: u32 = 16;

fn format() -> ImageFormat {
    ImageFormat::png(SIDE, SIDE)
}

fn loop_cfg(budget: u32, seed: u64) -> LoopConfig {
    LoopConfig {
        retry_budget: budget,
        base_seed: seed,
        width: SIDE,
        height: SIDE,
        ..LoopConfig::default()
    }
}

#[test]
fn accepted_results_always_match_target() {
    let catalog = ClassCatalog::default_catalog();
    let gen = ReferenceWorkerConfig::generator(FidelityParams::perfect());
    let val = ReferenceWorkerConfig::stub(StubPolicy::with_diagonal(9, 0.3), 11);
    let mut pool = in_process_pool(&gen, &val, &catalog, &format(), 2);
    let requests: Vec<(usize, usize)> = (0..9).map(|c| (c, 6)).collect();
    let results = batch_generate_validated(&mut pool, &requests, &loop_cfg(32, 5)).unwrap();
    assert_eq!(results.len(), 54);
    for r in results {
        let r = r.unwrap();
        let n = r.attempts.len();
        assert!((1..=32).contains(&n));
        assert!(r.attempts[..n - 1].iter().all(|a| !a.accepted));
        if r.outcome == Outcome::Accepted {
            let last = r.accepted_attempt().unwrap();
            assert_eq!(last.verdict.pred(), r.target);
            assert_eq!(r.sample.unwrap().class_id, Some(r.target));
        }
        let idx: Vec<u32> = r.attempts.iter().map(|a| a.attempt_index).collect();
        assert_eq!(idx, (1..=n as u32).collect::<Vec<_>>());
    }
}

#[test]
fn zero_diagonal_exhausts_budget_and_keeps_audit_images() {
    let catalog = ClassCatalog::default_catalog();
    let gen = ReferenceWorkerConfig::generator(FidelityParams::perfect());
    let val = ReferenceWorkerConfig::stub(StubPolicy::with_diagonal(9, 0.0), 2);
    let mut pool = in_process_pool(&gen, &val, &catalog, &format(), 1);
    let cfg = LoopConfig {
        audit_dumps: true,
        ..loop_cfg(5, 1)
    };
    let results = batch_generate_validated(&mut pool, &[(3, 4)], &cfg).unwrap();
    for r in results {
        let r = r.unwrap();
        assert_eq!(r.outcome, Outcome::BudgetExhausted);
        assert_eq!(r.attempts.len(), 5);
        assert!(r.sample.is_none());
        assert!(r.attempts.iter().all(|a| a.discarded_image.is_some()));
    }
}

#[test]
fn confidence_threshold_is_enforced() {
    let catalog = ClassCatalog::default_catalog();
    let gen = ReferenceWorkerConfig::generator(FidelityParams::new(0.5, 0.0).unwrap());
    let val = ReferenceWorkerConfig::centroid();
    let mut pool = in_process_pool(&gen, &val, &catalog, &format(), 1);
    let cfg = LoopConfig {
        confidence_threshold: 0.6,
        ..loop_cfg(8, 3)
    };
    for r in batch_generate_validated(&mut pool, &[(0, 5), (5, 5)], &cfg).unwrap() {
        let r = r.unwrap();
        for a in &r.attempts {
            assert_eq!(
                a.accepted,
                a.verdict.pred() == r.target && a.verdict.prob(r.target) >= 0.6
            );
        }
    }
}

#[test]
fn perfect_pair_evaluates_to_identity() {
    let catalog = ClassCatalog::default_catalog();
    let gen = ReferenceWorkerConfig::generator(FidelityParams::perfect());
    let val = ReferenceWorkerConfig::centroid();
    let mut pool = in_process_pool(&gen, &val, &catalog, &format(), 1);
    let cfg = EvalConfig {
        n_per_class: 4,
        base_seed: 1,
        width: SIDE,
        height: SIDE,
    };
    let manifest = RunManifest::new("{}".into(), 1, catalog.digest().into());
    let run = evaluate_first_attempt(&mut pool, &catalog, &cfg, &manifest).unwrap();
    let r = &run.report;
    for t in 0..9 {
        for p in 0..9 {
            assert_eq!(r.confusion.get(t, p), if t == p { 4 } else { 0 });
        }
    }
    assert_eq!(r.macro_f1(), 1.0);
    assert!(r.complete());
    assert_eq!(run.cells.len(), 36);
}

fn pixel_hashes(run: &valigen_core::evaluation::EvaluationRun) -> Vec<String> {
    run.cells
        .iter()
        .map(|c| c.sample.as_ref().unwrap().image.pixel_hash())
        .collect()
}

#[test]
fn evaluation_is_independent_of_pool_size() {
    let catalog = ClassCatalog::default_catalog();
    let gen = ReferenceWorkerConfig::generator(FidelityParams::new(0.4, 0.2).unwrap());
    let val = ReferenceWorkerConfig::centroid();
    let cfg = EvalConfig {
        n_per_class: 5,
        base_seed: 77,
        width: SIDE,
        height: SIDE,
    };
    let manifest = RunManifest::new("{}".into(), 77, catalog.digest().into());
    let mut one = in_process_pool(&gen, &val, &catalog, &format(), 1);
    let mut four = in_process_pool(&gen, &val, &catalog, &format(), 4);
    let a = evaluate_first_attempt(&mut one, &catalog, &cfg, &manifest).unwrap();
    let b = evaluate_first_attempt(&mut four, &catalog, &cfg, &manifest).unwrap();
    assert_eq!(a.report.to_canonical_json(), b.report.to_canonical_json());
    assert_eq!(pixel_hashes(&a), pixel_hashes(&b));
}

#[test]
fn report_survives_run_directory_round_trip() {
    let catalog = ClassCatalog::default_catalog();
    let gen = ReferenceWorkerConfig::generator(FidelityParams::new(0.3, 0.3).unwrap());
    let val = ReferenceWorkerConfig::centroid();
    let mut pool = in_process_pool(&gen, &val, &catalog, &format(), 1);
    let cfg = EvalConfig {
        n_per_class: 3,
        base_seed: 4,
        width: SIDE,
        height: SIDE,
    };
    let tmp = tempfile::tempdir().unwrap();
    let mut dir = RunDirectory::create(
        tmp.path().join("run"),
        RunManifest::new("{}".into(), 4, catalog.digest().into()),
    )
    .unwrap();
    let run = evaluate_first_attempt(&mut pool, &catalog, &cfg, dir.manifest()).unwrap();
    dir.write_report(&run.report, false).unwrap();
    dir.finalize().unwrap();
    let back: EvalReport = RunDirectory::open(dir.path())
        .unwrap()
        .read_report()
        .unwrap();
    assert_eq!(back, run.report);
    let csv = std::fs::read_to_string(dir.path().join("confusion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 10);
}
