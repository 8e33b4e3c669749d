//! Corpus conversion. Heuristic mode is pure rule-based rewriting; llm
//! mode samples candidates through a backend, scores them by perplexity,
//! keeps the best (or best k), and falls back to the heuristic for records
//! where nothing scorable came back.

use std::sync::Arc;

use instrux_core::backend::{load_backend_config, CompletionBackend, ScoreBackend};
use instrux_core::corpus::{read_corpus, write_corpus, Corpus};
use instrux_core::denoise::{score_candidate, select_test_time, select_train_time};
use instrux_core::error::{Error, Result};
use instrux_core::schema::{
    instruction_text, DemonstrationExample, ExampleBudget, FormatSpec, UnifiedTask,
};
use instrux_core::transfer::{
    heuristic_transfer, llm_transfer, load_seed_pairs, ParallelSeedPair, TransferParams,
};
use instrux_core::util::{ordered_parallel_map, stable_seed};
use serde::Serialize;
use serde_json::json;

use crate::args::{ConvertArgs, ConvertMode, GlobalArgs};
use crate::manifest::RunManifest;

use super::{corpus_name, parse_format, print_plan, sibling_path, write_json_lines};

/// One line of the transfer report: how each output record came to be.
#[derive(Debug, Serialize)]
struct TransferRecord {
    task_id: String,
    origin_task_id: String,
    mode: &'static str,
    source_format: String,
    target_format: String,
    /// Candidates sampled, parsed, and perplexity-scored for this record.
    candidates: usize,
    parsed: usize,
    scored: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected_sample: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    fallback: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

struct TaskOutcome {
    tasks: Vec<UnifiedTask>,
    records: Vec<TransferRecord>,
    fallback: bool,
}

pub fn run(globals: &GlobalArgs, args: &ConvertArgs) -> Result<i32> {
    if args.train_time && args.keep == 0 {
        return Err(Error::validation("--keep must be at least 1 with --train-time"));
    }
    if !(0.0..=1.0).contains(&args.fallback_threshold) {
        return Err(Error::validation("--fallback-threshold must lie in [0, 1]"));
    }
    let source_format = parse_format(&args.source_format)?;
    let target_format = parse_format(&args.target_format)?;
    let corpus = read_corpus(&args.input, &source_format)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| sibling_path(&args.output, "report.jsonl"));

    // llm mode needs a completer, a scorer, and seed pairs; resolve them
    // before any work so a bad profile fails fast.
    let llm = match args.mode {
        ConvertMode::Heuristic => None,
        ConvertMode::Llm => {
            let profile = globals.backend.as_deref().ok_or_else(|| {
                Error::config("convert --mode llm requires --backend <profile>")
            })?;
            let config = load_backend_config(&globals.config)?;
            let built = config.build(profile, globals.cache_dir.as_deref())?;
            let scorer = built.scorer.ok_or_else(|| {
                Error::Backend(instrux_core::error::BackendError::Capability(format!(
                    "profile {profile} cannot score candidates; llm mode needs logprob support"
                )))
            })?;
            let seeds_path = args.seeds.as_deref().ok_or_else(|| {
                Error::validation("convert --mode llm requires --seeds <pairs.jsonl>")
            })?;
            let seeds = load_seed_pairs(seeds_path)?;
            Some((built.completer, scorer, seeds))
        }
    };

    if globals.dry_run {
        print_plan(&json!({
            "command": "convert",
            "mode": match args.mode { ConvertMode::Heuristic => "heuristic", ConvertMode::Llm => "llm" },
            "input": args.input.display().to_string(),
            "tasks": corpus.tasks.len(),
            "source_format": source_format.code(),
            "target_format": target_format.code(),
            "output": args.output.display().to_string(),
            "report": report_path.display().to_string(),
            "n_samples": args.n_samples,
            "train_time": args.train_time,
            "keep": args.keep,
        }));
        return Ok(0);
    }

    let outcomes: Vec<Result<TaskOutcome>> = match &llm {
        None => ordered_parallel_map(&corpus.tasks, globals.concurrency, |_, task| {
            convert_heuristic(task, &target_format, globals.seed, args.num_pos)
        }),
        Some((completer, scorer, seeds)) => {
            ordered_parallel_map(&corpus.tasks, globals.concurrency, |_, task| {
                convert_llm(task, &target_format, completer, scorer, seeds, globals, args)
            })
        }
    };

    let mut tasks = Vec::new();
    let mut records = Vec::new();
    let mut fallbacks = 0usize;
    for outcome in outcomes {
        let outcome = outcome?;
        fallbacks += outcome.fallback as usize;
        tasks.extend(outcome.tasks);
        records.extend(outcome.records);
    }

    let converted = Corpus::new(corpus_name(&args.output), target_format.clone(), tasks)?;
    write_corpus(&converted, &args.output)?;
    records.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    write_json_lines(&report_path, &records)?;

    let mut manifest = RunManifest::new(
        "convert",
        &json!({
            "mode": match args.mode { ConvertMode::Heuristic => "heuristic", ConvertMode::Llm => "llm" },
            "source_format": source_format.code(),
            "target_format": target_format.code(),
            "n_samples": args.n_samples,
            "temperature": args.temperature,
            "max_tokens": args.max_tokens,
            "train_time": args.train_time,
            "keep": args.keep,
            "max_examples": args.max_examples,
            "num_pos": args.num_pos,
            "fallback_threshold": args.fallback_threshold,
            "concurrency": globals.concurrency,
        }),
        globals.backend.as_deref(),
        globals.seed,
    );
    manifest.add_input(&args.input)?;
    if let Some(seeds) = &args.seeds {
        manifest.add_input(seeds)?;
    }
    manifest.add_output(&args.output);
    manifest.add_output(&report_path);
    manifest.write(&args.output)?;

    let rate = fallbacks as f64 / corpus.tasks.len().max(1) as f64;
    println!(
        "convert: {} tasks -> {} records -> {} (report {})",
        corpus.tasks.len(),
        converted.tasks.len(),
        args.output.display(),
        report_path.display()
    );
    if llm.is_some() {
        println!("convert: {fallbacks} fallbacks ({:.1}% of records)", rate * 100.0);
        if rate > args.fallback_threshold {
            eprintln!(
                "convert: fallback rate {:.1}% exceeds threshold {:.1}%",
                rate * 100.0,
                args.fallback_threshold * 100.0
            );
            return Ok(3);
        }
    }
    Ok(0)
}

fn convert_heuristic(
    task: &UnifiedTask,
    target: &FormatSpec,
    seed: u64,
    num_pos: usize,
) -> Result<TaskOutcome> {
    let converted = heuristic_transfer(
        task,
        target,
        &task.instances,
        stable_seed(seed, &["heuristic", &task.task_id]),
        num_pos,
    )?;
    let record = TransferRecord {
        task_id: converted.task_id.clone(),
        origin_task_id: task.task_id.clone(),
        mode: "heuristic",
        source_format: task.source_format.code(),
        target_format: target.code(),
        candidates: 0,
        parsed: 0,
        scored: 0,
        selected_sample: None,
        ppl: None,
        rank: None,
        fallback: false,
        warnings: Vec::new(),
    };
    Ok(TaskOutcome { tasks: vec![converted], records: vec![record], fallback: false })
}

fn convert_llm(
    task: &UnifiedTask,
    target: &FormatSpec,
    completer: &Arc<dyn CompletionBackend>,
    scorer: &Arc<dyn ScoreBackend>,
    seeds: &[ParallelSeedPair],
    globals: &GlobalArgs,
    args: &ConvertArgs,
) -> Result<TaskOutcome> {
    let budget = ExampleBudget::default().clamped(task);
    let source_text = instruction_text(task, &task.source_format, budget)?;
    let params = TransferParams {
        n_samples: args.n_samples,
        temperature: args.temperature,
        max_tokens: args.max_tokens,
        base_seed: stable_seed(globals.seed, &["convert", &task.task_id]),
        allow_any_n: args.allow_any_n,
    };

    // A record whose completions are all empty has no scorable candidate;
    // that is a fallback, not a run-stopping failure.
    let mut candidates =
        match llm_transfer(completer.as_ref(), seeds, &source_text, target, &params, &task.task_id) {
            Ok(candidates) => candidates,
            Err(Error::Format(msg)) => {
                log::warn!("task {}: {msg}", task.task_id);
                Vec::new()
            }
            Err(other) => return Err(other),
        };

    // Worked examples for scoring: the task's own instances, or its
    // positive demonstrations when it carries no usable instances.
    let mut examples: Vec<DemonstrationExample> = task
        .instances
        .iter()
        .filter(|i| !i.references.is_empty())
        .map(|i| DemonstrationExample::new(&i.input, &i.references[0]))
        .collect();
    if examples.is_empty() {
        examples = task.positives.clone();
    }

    for candidate in &mut candidates {
        if candidate.parsed.is_none() || examples.is_empty() {
            continue;
        }
        match score_candidate(scorer.as_ref(), candidate, &examples, args.max_examples, &task.task_id) {
            Ok(score) => candidate.ppl = Some(score.ppl),
            Err(err @ Error::Backend(_)) => return Err(err),
            Err(err) => {
                log::debug!(
                    "task {}: candidate {} not scorable: {err}",
                    task.task_id,
                    candidate.sample_index
                )
            }
        }
    }

    let parsed = candidates.iter().filter(|c| c.parsed.is_some()).count();
    let scored = candidates.iter().filter(|c| c.ppl.is_some()).count();
    let selections: Vec<usize> = if args.train_time {
        select_train_time(&candidates, args.keep)?
    } else {
        select_test_time(&candidates).into_iter().collect()
    };

    if selections.is_empty() {
        let fallback = heuristic_transfer(
            task,
            target,
            &task.instances,
            stable_seed(globals.seed, &["heuristic", &task.task_id]),
            args.num_pos,
        )?;
        let record = TransferRecord {
            task_id: fallback.task_id.clone(),
            origin_task_id: task.task_id.clone(),
            mode: "llm",
            source_format: task.source_format.code(),
            target_format: target.code(),
            candidates: candidates.len(),
            parsed,
            scored,
            selected_sample: None,
            ppl: None,
            rank: None,
            fallback: true,
            warnings: Vec::new(),
        };
        return Ok(TaskOutcome { tasks: vec![fallback], records: vec![record], fallback: true });
    }

    let mut tasks = Vec::new();
    let mut records = Vec::new();
    for (rank, &idx) in selections.iter().enumerate() {
        let candidate = &candidates[idx];
        let fragment = candidate.parsed.as_ref().expect("selected candidates are parsed");
        let mut converted = fragment.apply(task);
        if rank > 0 {
            converted.task_id = format!("{}.v{rank}", task.task_id);
        }
        records.push(TransferRecord {
            task_id: converted.task_id.clone(),
            origin_task_id: task.task_id.clone(),
            mode: "llm",
            source_format: task.source_format.code(),
            target_format: target.code(),
            candidates: candidates.len(),
            parsed,
            scored,
            selected_sample: Some(candidate.sample_index),
            ppl: candidate.ppl,
            rank: args.train_time.then_some(rank),
            fallback: false,
            warnings: fragment.warnings.clone(),
        });
        tasks.push(converted);
    }
    Ok(TaskOutcome { tasks, records, fallback: false })
}
