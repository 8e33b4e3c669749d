//! Regenerates the demo fixtures under `fixtures/demo/`. Everything is
//! seeded, so rerunning this produces byte-identical files.
//!
//!     cargo run -p instrux-core --example make_demo

use std::path::Path;

use instrux_core::corpus::write_corpus;
use instrux_core::schema::FormatSpec;
use instrux_core::synth::{synth_corpus, SynthConfig};
use instrux_core::util::stable_seed;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let demo = root.join("fixtures/demo");
    std::fs::create_dir_all(&demo).expect("create fixtures/demo");

    let instance_cfg = SynthConfig {
        format: FormatSpec::parse_code("instance").unwrap(),
        num_tasks: 8,
        instances_per_task: 4,
        id_prefix: "demo".into(),
        seed: 11,
        with_blanks: false,
    };
    let instance_corpus = synth_corpus("instance_tasks", &instance_cfg).expect("synth instance corpus");
    write_corpus(&instance_corpus, &demo.join("instance_tasks.jsonl")).expect("write corpus");

    let task_cfg = SynthConfig {
        format: FormatSpec::parse_code("DPN").unwrap(),
        num_tasks: 8,
        instances_per_task: 4,
        id_prefix: "demo".into(),
        seed: 12,
        with_blanks: false,
    };
    let task_corpus = synth_corpus("task_tasks", &task_cfg).expect("synth task corpus");
    write_corpus(&task_corpus, &demo.join("task_tasks.jsonl")).expect("write corpus");

    // A second collection's take on the same tasks (shared ids, different
    // content) plus a few extras, for the mixture demo.
    let other_cfg = SynthConfig {
        format: FormatSpec::parse_code("instance").unwrap(),
        num_tasks: 12,
        instances_per_task: 4,
        id_prefix: "demo".into(),
        seed: 13,
        with_blanks: false,
    };
    let other_corpus = synth_corpus("other_tasks", &other_cfg).expect("synth other corpus");
    write_corpus(&other_corpus, &demo.join("other_tasks.jsonl")).expect("write corpus");

    // Predictions over the instance corpus: mostly exact, some paraphrased,
    // so the evaluate demo shows non-trivial EM and Rouge-L numbers.
    let mut lines = String::new();
    for task in &instance_corpus.tasks {
        let mut rng = StdRng::seed_from_u64(stable_seed(11, &["predictions", &task.task_id]));
        for instance in &task.instances {
            let reference = instance.references.first().expect("synth instances have references");
            let prediction = if rng.random_bool(0.7) {
                reference.clone()
            } else {
                format!("{reference} roughly")
            };
            lines.push_str(
                &serde_json::to_string(&serde_json::json!({
                    "task_id": task.task_id,
                    "instance_id": instance.instance_id,
                    "prediction": prediction,
                }))
                .unwrap(),
            );
            lines.push('\n');
        }
    }
    std::fs::write(demo.join("predictions.jsonl"), lines).expect("write predictions");

    println!("wrote fixtures/demo/instance_tasks.jsonl ({} tasks)", instance_corpus.tasks.len());
    println!("wrote fixtures/demo/task_tasks.jsonl ({} tasks)", task_corpus.tasks.len());
    println!("wrote fixtures/demo/other_tasks.jsonl ({} tasks)", other_corpus.tasks.len());
    println!("wrote fixtures/demo/predictions.jsonl");
}
