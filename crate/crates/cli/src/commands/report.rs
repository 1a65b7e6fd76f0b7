use anyhow::{Context, Result};
use valigen_core::evaluation::compare_runs;
use valigen_core::run_dir::RunDirectory;

use crate::{CompareArgs, ReportArgs};

pub(super) fn report(a: ReportArgs) -> Result<i32> {
    let run = RunDirectory::open(&a.run)?;
    let report = run.read_report()?;
    run.write_derived(&report, a.transpose)?;
    println!("class,name,precision,recall,f1,support");
    for m in &report.per_class {
        println!(
            "{},{},{:.6},{:.6},{:.6},{}",
            m.class_id, report.class_names[m.class_id], m.precision, m.recall, m.f1, m.support
        );
    }
    println!(
        "macro,,{:.6},{:.6},{:.6},",
        report.macro_precision(),
        report.macro_recall(),
        report.macro_f1()
    );
    Ok(0)
}

pub(super) fn compare(a: CompareArgs) -> Result<i32> {
    let table = compare_runs(&a.runs)?;
    std::fs::write(&a.out, table.to_csv())
        .with_context(|| format!("writing {}", a.out.display()))?;
    print!("{}", table.to_text());
    Ok(0)
}
