//! Render the machine-readable evaluation report as the human table.
//! (The table is also printed by `evaluate`; this command re-renders a
//! stored report without re-scoring anything.)

use std::fmt::Write as _;

use instrux_core::error::{Error, Result};
use instrux_core::metrics::EvalReport;
use serde::{Deserialize, Serialize};

use crate::args::ReportArgs;

/// On-disk shape of an evaluation run.
#[derive(Debug, Serialize, Deserialize)]
pub struct StoredReport {
    pub report: EvalReport,
    pub unjoined_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unjoined: Vec<UnjoinedRow>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UnjoinedRow {
    pub task_id: String,
    pub instance_id: String,
}

/// Scores are shown x100 with one decimal, table style.
pub fn render_table(report: &EvalReport) -> String {
    let width = report
        .per_task
        .keys()
        .map(|id| id.len())
        .chain(["overall".len()].into_iter())
        .max()
        .unwrap_or(7)
        .max(4);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>7}  {:>9}", "task", "em", "rouge-l", "instances");
    for (task_id, score) in &report.per_task {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6.1}  {:>7.1}  {:>9}",
            task_id,
            score.em * 100.0,
            score.rouge * 100.0,
            score.instances
        );
    }
    let _ = writeln!(
        out,
        "{:<width$}  {:>6.1}  {:>7.1}  {:>9}",
        "overall",
        report.overall_em * 100.0,
        report.overall_rouge * 100.0,
        report.instance_count
    );
    let _ = writeln!(out, "({} tasks, macro average)", report.task_count);
    out
}

pub fn run(args: &ReportArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.report).map_err(|e| Error::io(&args.report, e))?;
    let stored: StoredReport = serde_json::from_str(&text)
        .map_err(|e| Error::json(args.report.display().to_string(), e))?;
    print!("{}", render_table(&stored.report));
    if stored.unjoined_count > 0 {
        println!("unjoined predictions: {}", stored.unjoined_count);
    }
    Ok(0)
}
