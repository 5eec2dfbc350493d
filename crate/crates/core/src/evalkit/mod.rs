//! Word error rate, alignment counts, dataset evaluation, and reports.

mod align;
mod report;

pub use align::{edit_alignment, percent_one_decimal, wer, EditAlignment};
pub use report::{
    evaluate_logits, evaluate_model, infer_logits, render_report, EvalReport, ReportFormat, SentenceReport,
    VerdictTally,
};
