//! Leakage filtering: drop training instances whose normalized
//! (input, reference) pair also appears in the test corpus.

use instrux_core::corpus::{filter_leakage, read_corpus, write_corpus};
use instrux_core::error::Result;
use serde_json::json;

use crate::args::{FilterArgs, GlobalArgs};
use crate::manifest::RunManifest;

use super::{parse_format, print_plan, sibling_path, write_pretty_json};

pub fn run(globals: &GlobalArgs, args: &FilterArgs) -> Result<i32> {
    let train_format = parse_format(&args.train_format)?;
    let test_format = parse_format(&args.test_format)?;
    let train = read_corpus(&args.train, &train_format)?;
    let test = read_corpus(&args.test, &test_format)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| sibling_path(&args.output, "report.json"));

    if globals.dry_run {
        print_plan(&json!({
            "command": "filter",
            "train": args.train.display().to_string(),
            "train_instances": train.instance_count(),
            "test": args.test.display().to_string(),
            "test_instances": test.instance_count(),
            "output": args.output.display().to_string(),
            "report": report_path.display().to_string(),
        }));
        return Ok(0);
    }

    let (filtered, report) = filter_leakage(&train, &test);
    write_corpus(&filtered, &args.output)?;
    write_pretty_json(&report_path, &report)?;

    let mut manifest = RunManifest::new(
        "filter",
        &json!({ "train_format": train_format.code(), "test_format": test_format.code() }),
        None,
        globals.seed,
    );
    manifest.add_input(&args.train)?;
    manifest.add_input(&args.test)?;
    manifest.add_output(&args.output);
    manifest.add_output(&report_path);
    manifest.write(&args.output)?;

    println!(
        "filter: removed {} leaked instances, dropped {} emptied tasks -> {}",
        report.instances_removed,
        report.tasks_dropped.len(),
        args.output.display()
    );
    Ok(0)
}
