//! Benchmarks for the hot paths: metric scoring, rendering, prompt
//! assembly, heuristic conversion, leakage filtering, and candidate
//! selection.
//!
//!     cargo bench -p instrux-bench

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use instrux_bench::{instance_level_corpus, scored_candidates, task_level_corpus};
use instrux_core::corpus::filter_leakage;
use instrux_core::denoise::{select_test_time, select_train_time};
use instrux_core::metrics::rouge_l;
use instrux_core::schema::{instruction_text, ComponentMask, ExampleBudget, FormatSpec};
use instrux_core::transfer::{build_transfer_prompt, heuristic_transfer, ParallelSeedPair};

fn bench_rouge(c: &mut Criterion) {
    let prediction = "the committee approved the final draft of the proposal after a long debate";
    let reference = "after a long debate the committee approved a final version of the proposal";
    c.bench_function("rouge_l/15x14_tokens", |b| {
        b.iter(|| rouge_l(black_box(prediction), black_box(reference)))
    });

    let long_p = vec!["alpha beta gamma delta"; 20].join(" ");
    let long_r = vec!["beta gamma epsilon delta"; 20].join(" ");
    c.bench_function("rouge_l/80x80_tokens", |b| {
        b.iter(|| rouge_l(black_box(&long_p), black_box(&long_r)))
    });
}

fn bench_render(c: &mut Criterion) {
    let corpus = task_level_corpus(1, 21);
    let task = &corpus.tasks[0];
    let budget = ExampleBudget::default().clamped(task);
    c.bench_function("render/instruction_text_dpne", |b| {
        b.iter(|| instruction_text(black_box(task), &task.source_format, budget).unwrap())
    });
}

fn bench_prompt(c: &mut Criterion) {
    let seeds: Vec<ParallelSeedPair> = (0..3)
        .map(|i| {
            ParallelSeedPair::new(
                format!("pair-{i}"),
                format!("Classify the record: {{input}} (style {i})"),
                format!(
                    "Definition: Decide which of the two buckets record {i} belongs to.\n\n\
                     Positive Example 1—\nInput: a warm item\nOutput: first"
                ),
            )
            .unwrap()
        })
        .collect();
    let source = "Label the sentence as formal or informal: {input}";
    c.bench_function("prompt/build_transfer_k3", |b| {
        b.iter(|| build_transfer_prompt(black_box(&seeds), black_box(source)).unwrap())
    });
}

fn bench_heuristic(c: &mut Criterion) {
    let corpus = instance_level_corpus(1, 22);
    let task = &corpus.tasks[0];
    let target = FormatSpec::Task { mask: ComponentMask::DPNE };
    c.bench_function("heuristic/instance_to_dpne", |b| {
        b.iter(|| heuristic_transfer(black_box(task), &target, &task.instances, 9, 2).unwrap())
    });
}

fn bench_leakage(c: &mut Criterion) {
    let train = instance_level_corpus(100, 23);
    let test = instance_level_corpus(40, 23); // same seed: heavy overlap
    c.bench_function("leakage/filter_100x40_tasks", |b| {
        b.iter(|| filter_leakage(black_box(&train), black_box(&test)))
    });
}

fn bench_selection(c: &mut Criterion) {
    let candidates = scored_candidates(32);
    c.bench_function("selection/test_time_n32", |b| {
        b.iter(|| select_test_time(black_box(&candidates)))
    });
    c.bench_function("selection/train_time_k2_n32", |b| {
        b.iter(|| select_train_time(black_box(&candidates), 2).unwrap())
    });
}

criterion_group!(
    benches,
    bench_rouge,
    bench_render,
    bench_prompt,
    bench_heuristic,
    bench_leakage,
    bench_selection
);
criterion_main!(benches);
