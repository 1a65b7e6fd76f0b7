//! First-attempt evaluation. Confusion rows are the prompted class, columns
//! the predicted class.

mod charts;
mod compare;
mod confusion;
mod harness;
mod metrics;
mod report;

pub use charts::{render_charts, Charts};
pub use compare::{compare_runs, ComparisonRow, ComparisonTable};
pub use confusion::{confusion_from_pairs, ConfusionMatrix};
pub use harness::{eval_seed, evaluate_first_attempt, EvalCell, EvalConfig, EvaluationRun};
pub use metrics::{metrics_from_confusion, ClassMetrics, MacroMetrics};
pub use report::{CellError, EvalReport, REPORT_FORMAT};
