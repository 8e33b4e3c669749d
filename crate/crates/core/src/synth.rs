//! Seeded synthetic corpora for tests, fixtures, and benchmarks.
//!
//! The generator invents small classification-style tasks from fixed word
//! banks. Content is meaningless but well-formed; every optional feature of
//! the record shape (categories, explanations, extra keys, multiple
//! references, blank markers) appears with some probability so round-trip
//! tests exercise the full surface. Same config, same bytes.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde_json::json;

use crate::corpus::Corpus;
use crate::error::Result;
use crate::schema::{
    Component, ComponentMask, DemonstrationExample, FormatSpec, TaskInstance, UnifiedTask,
};
use crate::util::stable_seed;

const NOUNS: [&str; 16] = [
    "kettle", "lantern", "ribbon", "walrus", "meadow", "pigeon", "anchor", "biscuit", "violin",
    "glacier", "turnip", "satchel", "marble", "falcon", "harbor", "cactus",
];
const ADJECTIVES: [&str; 12] = [
    "bright", "hollow", "crooked", "silent", "amber", "frosty", "mellow", "spotted", "sturdy",
    "gentle", "brisk", "faded",
];
const VERBS: [&str; 8] =
    ["sorts", "labels", "counts", "pairs", "ranks", "groups", "weighs", "names"];
const CATEGORIES: [&str; 3] = ["classification", "matching", "generation"];

#[derive(Clone, Debug)]
pub struct SynthConfig {
    /// Format every generated task uses. Templates/keyword lists are
    /// invented per task when the spec does not carry them.
    pub format: FormatSpec,
    pub num_tasks: usize,
    pub instances_per_task: usize,
    /// Prefix for task ids (`{prefix}{i:04}`), so two corpora generated
    /// with the same prefix share ids — useful for mixtures.
    pub id_prefix: String,
    pub seed: u64,
    /// Occasionally satisfy a mask component with a blank marker instead
    /// of content, as a transferred corpus would.
    pub with_blanks: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            format: FormatSpec::Task { mask: ComponentMask::DP },
            num_tasks: 20,
            instances_per_task: 10,
            id_prefix: "task".into(),
            seed: 0,
            with_blanks: false,
        }
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, bank: &[&'a str]) -> &'a str {
    bank.choose(rng).expect("word banks are non-empty")
}

fn phrase(rng: &mut ChaCha8Rng, words: usize) -> String {
    (0..words)
        .map(|_| if rng.random_bool(0.4) { pick(rng, &ADJECTIVES) } else { pick(rng, &NOUNS) })
        .collect::<Vec<_>>()
        .join(" ")
}

fn definition_sentence(rng: &mut ChaCha8Rng) -> String {
    let adj = pick(rng, &ADJECTIVES);
    let noun = pick(rng, &NOUNS);
    let verb = pick(rng, &VERBS);
    let article = if noun.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
    match rng.random_range(0..3) {
        0 => format!(
            "Given a short phrase about {article} {noun}, answer yes if it sounds {adj} and no otherwise."
        ),
        1 => format!(
            "Read the phrase and decide whether the speaker {verb} the {noun}; answer yes or no."
        ),
        _ => format!(
            "Decide if the {adj} {noun} belongs in the list; reply with yes or no only."
        ),
    }
}

fn label(rng: &mut ChaCha8Rng) -> &'static str {
    if rng.random_bool(0.5) {
        "yes"
    } else {
        "no"
    }
}

fn example(rng: &mut ChaCha8Rng, with_explanation: bool) -> DemonstrationExample {
    let words = rng.random_range(3..6);
    let input = phrase(rng, words);
    let output = label(rng);
    let mut ex = DemonstrationExample::new(input, output);
    if with_explanation {
        let noun = pick(rng, &NOUNS);
        ex = ex.with_explanation(format!("The phrase mentions the {noun}, so {output} fits."));
    }
    ex
}

fn instance(rng: &mut ChaCha8Rng, task_index: usize, instance_index: usize) -> TaskInstance {
    // the serial phrase keeps (input, reference) pairs unique corpus-wide,
    // which leakage tests rely on
    let words = rng.random_range(3..7);
    let input = format!("{} record {task_index} {instance_index}", phrase(rng, words));
    let mut references = vec![label(rng).to_string()];
    if rng.random_bool(0.25) {
        references.push(format!("{} {}", references[0], pick(rng, &ADJECTIVES)));
    }
    let mut inst = TaskInstance::new(format!("i{instance_index:03}"), input, references);
    if rng.random_bool(0.2) {
        inst.extra.insert("split".into(), json!("train"));
    }
    inst
}

fn invent_template(rng: &mut ChaCha8Rng) -> String {
    let noun = pick(rng, &NOUNS);
    match rng.random_range(0..3) {
        0 => format!("Is this {noun} phrase agreeable? {{input}}\nAnswer yes or no:"),
        1 => "Phrase: {input}\nSay yes or no:".to_string(),
        _ => format!("Considering the {noun}, label the phrase: {{input}}"),
    }
}

fn invent_keywords(rng: &mut ChaCha8Rng) -> Vec<String> {
    let count = rng.random_range(1..3);
    (0..count).map(|_| pick(rng, &VERBS).to_string()).collect()
}

/// Generate a corpus of `cfg.num_tasks` invented tasks in `cfg.format`.
pub fn synth_corpus(name: &str, cfg: &SynthConfig) -> Result<Corpus> {
    let mut tasks = Vec::with_capacity(cfg.num_tasks);
    for i in 0..cfg.num_tasks {
        let task_id = format!("{}{i:04}", cfg.id_prefix);
        let mut rng = ChaCha8Rng::seed_from_u64(stable_seed(cfg.seed, &["synth", &task_id]));
        let mut task = UnifiedTask {
            task_id,
            instances: (0..cfg.instances_per_task).map(|j| instance(&mut rng, i, j)).collect(),
            category: rng
                .random_bool(0.5)
                .then(|| pick(&mut rng, &CATEGORIES).to_string()),
            ..UnifiedTask::default()
        };
        if rng.random_bool(0.25) {
            task.extra.insert("origin".into(), json!(format!("synthetic {}", pick(&mut rng, &NOUNS))));
        }
        match &cfg.format {
            FormatSpec::Task { mask } => {
                task.source_format = FormatSpec::Task { mask: *mask };
                if mask.has_d() {
                    if cfg.with_blanks && rng.random_bool(0.15) {
                        task.filled.set(Component::Definition);
                    } else {
                        task.definition = Some(definition_sentence(&mut rng));
                    }
                }
                let with_explanation = mask.has_e();
                if mask.has_p() {
                    let count = rng.random_range(2..4);
                    task.positives =
                        (0..count).map(|_| example(&mut rng, with_explanation)).collect();
                }
                if mask.has_n() {
                    if cfg.with_blanks && rng.random_bool(0.15) {
                        task.filled.set(Component::Negatives);
                    } else {
                        let count = rng.random_range(1..3);
                        task.negatives =
                            (0..count).map(|_| example(&mut rng, with_explanation)).collect();
                    }
                }
                if mask.has_e() && !task.component_present(Component::Explanations) {
                    task.filled.set(Component::Explanations);
                }
            }
            FormatSpec::Instance { template } => {
                let template =
                    template.clone().unwrap_or_else(|| invent_template(&mut rng));
                task.source_format = FormatSpec::instance(Some(template))?;
            }
            FormatSpec::Keywords { keywords } => {
                let keywords =
                    keywords.clone().unwrap_or_else(|| invent_keywords(&mut rng));
                task.source_format = FormatSpec::keywords(Some(keywords))?;
            }
        }
        tasks.push(task);
    }
    Corpus::new(name, cfg.format.clone(), tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{encode_task, parse_component_mask};

    #[test]
    fn same_config_same_corpus() {
        let cfg = SynthConfig { num_tasks: 8, ..SynthConfig::default() };
        let a = synth_corpus("c", &cfg).unwrap();
        let b = synth_corpus("c", &cfg).unwrap();
        assert_eq!(a, b);
        let c = synth_corpus("c", &SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c, "seed changes content");
    }

    #[test]
    fn tasks_satisfy_their_own_format() {
        for code in ["DP", "DPN", "DPE", "DPNE"] {
            let cfg = SynthConfig {
                format: FormatSpec::Task { mask: parse_component_mask(code).unwrap() },
                num_tasks: 12,
                with_blanks: true,
                ..SynthConfig::default()
            };
            let corpus = synth_corpus("c", &cfg).unwrap();
            for task in &corpus.tasks {
                encode_task(task, &task.source_format)
                    .unwrap_or_else(|e| panic!("task {} under {code}: {e}", task.task_id));
            }
        }
    }

    #[test]
    fn instance_and_keyword_levels_carry_their_surfaces() {
        let cfg = SynthConfig {
            format: FormatSpec::Instance { template: None },
            num_tasks: 6,
            ..SynthConfig::default()
        };
        let corpus = synth_corpus("c", &cfg).unwrap();
        for task in &corpus.tasks {
            let template = task.source_format.template().expect("instance tasks get templates");
            assert!(template.contains("{input}"));
        }

        let cfg = SynthConfig {
            format: FormatSpec::Keywords { keywords: None },
            num_tasks: 6,
            ..SynthConfig::default()
        };
        let corpus = synth_corpus("c", &cfg).unwrap();
        for task in &corpus.tasks {
            let kws = task.source_format.keyword_list().expect("keyword tasks get keywords");
            assert!(!kws.is_empty());
        }
    }

    #[test]
    fn shared_prefix_means_shared_ids() {
        let a = synth_corpus("a", &SynthConfig { num_tasks: 5, ..SynthConfig::default() }).unwrap();
        let b = synth_corpus("b", &SynthConfig { num_tasks: 9, seed: 77, ..SynthConfig::default() })
            .unwrap();
        let ids_a: Vec<_> = a.tasks.iter().map(|t| &t.task_id).collect();
        let ids_b: Vec<_> = b.tasks.iter().take(5).map(|t| &t.task_id).collect();
        assert_eq!(ids_a, ids_b);
    }

    #[test]
    fn instance_pairs_are_unique_corpus_wide() {
        let cfg = SynthConfig { num_tasks: 30, instances_per_task: 20, ..SynthConfig::default() };
        let corpus = synth_corpus("c", &cfg).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for task in &corpus.tasks {
            for inst in &task.instances {
                assert!(
                    seen.insert((
                        crate::metrics::normalize_text(&inst.input),
                        crate::metrics::normalize_text(&inst.references[0]),
                    )),
                    "collision at {}:{}",
                    task.task_id,
                    inst.instance_id
                );
            }
        }
    }
}
