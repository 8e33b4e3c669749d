//! Distillation pairs: generate simple instructions from complex ones and
//! emit (generated, original) training pairs for a small transfer model.

use instrux_core::backend::load_backend_config;
use instrux_core::corpus::{
    build_distill_pairs, read_corpus, write_distill_pairs, write_train_config, DistillParams,
};
use instrux_core::error::{Error, Result};
use instrux_core::transfer::load_seed_pairs;
use serde_json::json;

use crate::args::{DistillArgs, GlobalArgs};
use crate::manifest::RunManifest;

use super::{parse_format, print_plan};

pub fn run(globals: &GlobalArgs, args: &DistillArgs) -> Result<i32> {
    let format = parse_format(&args.format)?;
    let corpus = read_corpus(&args.input, &format)?;
    let seeds = load_seed_pairs(&args.seeds)?;
    let profile = globals
        .backend
        .as_deref()
        .ok_or_else(|| Error::config("distill requires --backend <profile>"))?;
    let config = load_backend_config(&globals.config)?;
    let built = config.build(profile, globals.cache_dir.as_deref())?;
    let params = DistillParams {
        target_count: args.count,
        generations_per_task: args.gens_per_task,
        rng_seed: globals.seed,
        temperature: args.temperature,
        max_tokens: args.max_tokens,
        workers: globals.concurrency,
    };

    if globals.dry_run {
        print_plan(&json!({
            "command": "distill",
            "input": args.input.display().to_string(),
            "tasks": corpus.tasks.len(),
            "seed_pairs": seeds.len(),
            "target_count": args.count,
            "gens_per_task": args.gens_per_task,
            "max_possible": corpus.tasks.len() * args.gens_per_task as usize,
            "output": args.output.display().to_string(),
        }));
        return Ok(0);
    }

    let (pairs, stats) = build_distill_pairs(&corpus, built.completer.as_ref(), &seeds, &params)?;
    write_distill_pairs(&pairs, &args.output)?;
    if let Some(train_config) = &args.train_config {
        write_train_config(train_config, &args.output.display().to_string())?;
    }

    let mut manifest = RunManifest::new(
        "distill",
        &json!({
            "format": format.code(),
            "target_count": args.count,
            "gens_per_task": args.gens_per_task,
            "temperature": args.temperature,
            "max_tokens": args.max_tokens,
        }),
        Some(profile),
        globals.seed,
    );
    manifest.add_input(&args.input)?;
    manifest.add_input(&args.seeds)?;
    manifest.add_output(&args.output);
    if let Some(train_config) = &args.train_config {
        manifest.add_output(train_config);
    }
    manifest.write(&args.output)?;

    println!(
        "distill: {} pairs from {} tasks ({} generations, {} empty) -> {}",
        stats.pairs_emitted,
        stats.tasks_used,
        stats.generations_requested,
        stats.skipped_empty,
        args.output.display()
    );
    if stats.shortfall {
        log::warn!(
            "distill: produced {} of {} requested pairs; corpus exhausted",
            stats.pairs_emitted,
            args.count
        );
        println!(
            "distill: shortfall - {} of {} requested pairs",
            stats.pairs_emitted, args.count
        );
    }
    Ok(0)
}
