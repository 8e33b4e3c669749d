//! Join predictions to their reference instances and score them.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};

use instrux_core::corpus::read_corpus;
use instrux_core::error::{Error, Result};
use instrux_core::metrics::{aggregate, exact_match, rouge_l_max, EvalRecord};
use serde::Deserialize;
use serde_json::json;

use crate::args::{EvaluateArgs, GlobalArgs};
use crate::manifest::RunManifest;

use super::report::{render_table, StoredReport, UnjoinedRow};
use super::{parse_format, print_plan, write_pretty_json};

#[derive(Debug, Deserialize)]
struct PredictionRow {
    task_id: String,
    instance_id: String,
    prediction: String,
}

fn read_predictions(path: &std::path::Path) -> Result<Vec<PredictionRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: PredictionRow = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), line_no + 1), e))?;
        if !seen.insert((row.task_id.clone(), row.instance_id.clone())) {
            return Err(Error::validation(format!(
                "duplicate prediction for task {:?} instance {:?}",
                row.task_id, row.instance_id
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::validation(format!(
            "{}: no predictions to evaluate",
            path.display()
        )));
    }
    Ok(rows)
}

pub fn run(globals: &GlobalArgs, args: &EvaluateArgs) -> Result<i32> {
    let format = parse_format(&args.format)?;
    let corpus = read_corpus(&args.references, &format)?;
    let predictions = read_predictions(&args.predictions)?;

    if globals.dry_run {
        print_plan(&json!({
            "command": "evaluate",
            "predictions": args.predictions.display().to_string(),
            "prediction_rows": predictions.len(),
            "references": args.references.display().to_string(),
            "reference_instances": corpus.instance_count(),
            "report": args.report.display().to_string(),
            "strict": args.strict,
        }));
        return Ok(0);
    }

    let mut records = Vec::new();
    let mut unjoined = Vec::new();
    for row in &predictions {
        let instance = corpus.task(&row.task_id).and_then(|t| t.instance(&row.instance_id));
        let Some(instance) = instance else {
            unjoined.push(UnjoinedRow {
                task_id: row.task_id.clone(),
                instance_id: row.instance_id.clone(),
            });
            continue;
        };
        if instance.references.is_empty() {
            return Err(Error::validation(format!(
                "task {:?} instance {:?} has no references to score against",
                row.task_id, row.instance_id
            )));
        }
        let em = exact_match(&row.prediction, &instance.references)?;
        let rouge = rouge_l_max(&row.prediction, &instance.references)?;
        records.push(EvalRecord::new(&row.task_id, &row.instance_id, em, rouge));
    }

    if args.strict && !unjoined.is_empty() {
        let shown: Vec<String> = unjoined
            .iter()
            .take(5)
            .map(|u| format!("{}/{}", u.task_id, u.instance_id))
            .collect();
        return Err(Error::validation(format!(
            "{} predictions join to no reference instance (first: {})",
            unjoined.len(),
            shown.join(", ")
        )));
    }
    if records.is_empty() {
        return Err(Error::validation("no prediction joined to a reference instance"));
    }

    let report = aggregate(&records)?;
    let stored = StoredReport { report, unjoined_count: unjoined.len(), unjoined };
    write_pretty_json(&args.report, &stored)?;

    let mut manifest = RunManifest::new(
        "evaluate",
        &json!({ "strict": args.strict, "format": format.code() }),
        None,
        globals.seed,
    );
    manifest.add_input(&args.predictions)?;
    manifest.add_input(&args.references)?;
    manifest.add_output(&args.report);
    manifest.write(&args.report)?;

    print!("{}", render_table(&stored.report));
    if stored.unjoined_count > 0 {
        println!("unjoined predictions: {} (kept out of the averages)", stored.unjoined_count);
    }
    Ok(0)
}
