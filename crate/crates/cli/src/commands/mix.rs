//! Training mixtures: a sampled set of primary-corpus tasks, optionally
//! joined by the same tasks in the other corpus's format and by an equal
//! number of distinct other-corpus tasks.

use instrux_core::corpus::{build_mixture, read_corpus, write_corpus, MixtureConfig};
use instrux_core::error::Result;
use serde_json::json;

use crate::args::{GlobalArgs, MixArgs};
use crate::manifest::RunManifest;

use super::{parse_format, print_plan};

pub fn run(globals: &GlobalArgs, args: &MixArgs) -> Result<i32> {
    let ni_format = parse_format(&args.ni_format)?;
    let other_format = parse_format(&args.other_format)?;
    let ni = read_corpus(&args.ni, &ni_format)?;
    let other = read_corpus(&args.other, &other_format)?;
    let config = MixtureConfig {
        src_task_count: args.src,
        include_same: args.same,
        include_diff: args.diff,
        rng_seed: globals.seed,
    };

    if globals.dry_run {
        let expected = args.src * (1 + args.same as usize + args.diff as usize);
        print_plan(&json!({
            "command": "mix",
            "ni": args.ni.display().to_string(),
            "other": args.other.display().to_string(),
            "src": args.src,
            "same": args.same,
            "diff": args.diff,
            "expected_tasks": expected,
            "output": args.output.display().to_string(),
        }));
        return Ok(0);
    }

    let mixture = build_mixture(&ni, &other, &config)?;
    write_corpus(&mixture, &args.output)?;

    let mut manifest = RunManifest::new(
        "mix",
        &json!({
            "src": args.src,
            "same": args.same,
            "diff": args.diff,
            "ni_format": ni_format.code(),
            "other_format": other_format.code(),
        }),
        None,
        globals.seed,
    );
    manifest.add_input(&args.ni)?;
    manifest.add_input(&args.other)?;
    manifest.add_output(&args.output);
    manifest.write(&args.output)?;

    println!("mix: {} tasks -> {}", mixture.tasks.len(), args.output.display());
    Ok(0)
}
