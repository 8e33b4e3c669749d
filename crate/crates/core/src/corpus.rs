//! Corpus-level operations: I/O, leakage filtering, diversity mixtures,
//! per-task instance caps, and distillation-pair construction.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{CompletionBackend, CompletionRequest};
use crate::error::{Error, Result};
use crate::metrics::normalize_text;
use crate::schema::{
    decode_task, encode_task, ExampleBudget, FormatSpec, TaskRecord, UnifiedTask,
};
use crate::transfer::{build_transfer_prompt, ParallelSeedPair, TRANSFER_STOP};
use crate::util::{ordered_parallel_map, stable_seed};

/// A named set of tasks sharing one format level.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub format: FormatSpec,
    pub tasks: Vec<UnifiedTask>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, format: FormatSpec, tasks: Vec<UnifiedTask>) -> Result<Self> {
        let corpus = Corpus { name: name.into(), format, tasks };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        self.format.validate()?;
        let mut seen = BTreeSet::new();
        for task in &self.tasks {
            if !seen.insert(task.task_id.as_str()) {
                return Err(Error::validation(format!(
                    "corpus {}: duplicate task id {}",
                    self.name, task.task_id
                )));
            }
            if task.source_format.level() != self.format.level() {
                return Err(Error::validation(format!(
                    "corpus {}: task {} is {} level but the corpus is {} level",
                    self.name,
                    task.task_id,
                    task.source_format.level(),
                    self.format.level()
                )));
            }
        }
        Ok(())
    }

    pub fn task(&self, task_id: &str) -> Option<&UnifiedTask> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn instance_count(&self) -> usize {
        self.tasks.iter().map(|t| t.instances.len()).sum()
    }
}

/// Read a JSON-Lines corpus. Records are decoded against `format`
/// (per-record templates and keyword lists refine it); the corpus takes its
/// name from the file stem.
pub fn read_corpus(path: &Path, format: &FormatSpec) -> Result<Corpus> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .unwrap_or_else(|| "corpus".to_string());
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut tasks = Vec::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TaskRecord = serde_json::from_str(&line).map_err(|e| {
            Error::json(format!("{}:{}", path.display(), line_no + 1), e)
        })?;
        tasks.push(decode_task(record, format)?);
    }
    if tasks.is_empty() {
        return Err(Error::validation(format!("corpus {} is empty", path.display())));
    }
    Corpus::new(name, format.clone(), tasks)
}

/// Write a corpus as JSON-Lines, one task per line, sorted by task id.
/// Each task is encoded against its own (refined) format.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    corpus.validate()?;
    let mut sorted: Vec<&UnifiedTask> = corpus.tasks.iter().collect();
    sorted.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    create_parent_dirs(path)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for task in sorted {
        let record = encode_task(task, &task.source_format)?;
        let line = serde_json::to_string(&record)
            .map_err(|e| Error::json(format!("encoding task {}", task.task_id), e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Instances removed from one task by the leakage filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageRemoval {
    pub task_id: String,
    pub instance_ids: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub removals: Vec<LeakageRemoval>,
    pub instances_removed: usize,
    /// Tasks dropped because every instance was removed.
    pub tasks_dropped: Vec<String>,
}

fn leakage_key(input: &str, first_reference: &str) -> (String, String) {
    (normalize_text(input), normalize_text(first_reference))
}

/// Drop every training instance whose normalized (input, first-reference)
/// pair also appears in `test`; tasks left with no instances are dropped
/// whole. Exact match after normalization only — no fuzzy detection.
pub fn filter_leakage(train: &Corpus, test: &Corpus) -> (Corpus, LeakageReport) {
    let test_pairs: BTreeSet<(String, String)> = test
        .tasks
        .iter()
        .flat_map(|task| task.instances.iter())
        .filter(|inst| !inst.references.is_empty())
        .map(|inst| leakage_key(&inst.input, &inst.references[0]))
        .collect();

    let mut report = LeakageReport::default();
    let mut kept_tasks = Vec::new();
    for task in &train.tasks {
        let mut kept = Vec::new();
        let mut removed_ids = Vec::new();
        for instance in &task.instances {
            let overlaps = !instance.references.is_empty()
                && test_pairs.contains(&leakage_key(&instance.input, &instance.references[0]));
            if overlaps {
                removed_ids.push(instance.instance_id.clone());
            } else {
                kept.push(instance.clone());
            }
        }
        if !removed_ids.is_empty() {
            report.instances_removed += removed_ids.len();
            report.removals.push(LeakageRemoval {
                task_id: task.task_id.clone(),
                instance_ids: removed_ids,
            });
        }
        if kept.is_empty() {
            report.tasks_dropped.push(task.task_id.clone());
        } else {
            let mut task = task.clone();
            task.instances = kept;
            kept_tasks.push(task);
        }
    }

    let filtered = Corpus {
        name: format!("{}.filtered", train.name),
        format: train.format.clone(),
        tasks: kept_tasks,
    };
    (filtered, report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub src_task_count: usize,
    pub include_same: bool,
    pub include_diff: bool,
    pub rng_seed: u64,
}

/// Build a diversity mixture: `src` tasks sampled from `ni`, plus
/// (optionally) the same task ids taken from `other` and/or an equal number
/// of disjoint task ids from `other`. Task ids in the result are prefixed
/// with their corpus of origin so the three groups stay distinguishable.
///
/// `src` is always sampled from the id intersection of the two corpora, so
/// the same seed selects the same `src` set whether or not `same`/`diff`
/// are enabled.
pub fn build_mixture(ni: &Corpus, other: &Corpus, cfg: &MixtureConfig) -> Result<Corpus> {
    if cfg.src_task_count == 0 {
        return Err(Error::validation("mixture src_task_count must be at least 1"));
    }
    if ni.format.level() != other.format.level() {
        return Err(Error::validation(format!(
            "mixture corpora must share a format level; {} is {} but {} is {}",
            ni.name,
            ni.format.level(),
            other.name,
            other.format.level()
        )));
    }

    let other_ids: BTreeSet<&str> = other.tasks.iter().map(|t| t.task_id.as_str()).collect();
    let mut shared: Vec<&str> = ni
        .tasks
        .iter()
        .map(|t| t.task_id.as_str())
        .filter(|id| other_ids.contains(id))
        .collect();
    shared.sort_unstable();
    if shared.len() < cfg.src_task_count {
        return Err(Error::validation(format!(
            "mixture needs {} task ids shared between {} and {}, found {}",
            cfg.src_task_count, ni.name, other.name, shared.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    shared.shuffle(&mut rng);
    let mut src_ids: Vec<&str> = shared[..cfg.src_task_count].to_vec();
    src_ids.sort_unstable();
    let src_set: BTreeSet<&str> = src_ids.iter().copied().collect();

    let mut tasks = Vec::new();
    let prefix_task = |task: &UnifiedTask, corpus_name: &str| {
        let mut task = task.clone();
        task.task_id = format!("{corpus_name}:{}", task.task_id);
        task
    };
    for id in &src_ids {
        tasks.push(prefix_task(ni.task(id).expect("id came from ni"), &ni.name));
    }
    if cfg.include_same {
        for id in &src_ids {
            tasks.push(prefix_task(other.task(id).expect("id is shared"), &other.name));
        }
    }
    if cfg.include_diff {
        let mut disjoint: Vec<&str> =
            other_ids.iter().copied().filter(|id| !src_set.contains(id)).collect();
        disjoint.sort_unstable();
        if disjoint.len() < cfg.src_task_count {
            return Err(Error::validation(format!(
                "mixture needs {} task ids in {} outside the src set, found {}",
                cfg.src_task_count,
                other.name,
                disjoint.len()
            )));
        }
        disjoint.shuffle(&mut rng);
        let mut diff_ids = disjoint[..cfg.src_task_count].to_vec();
        diff_ids.sort_unstable();
        for id in diff_ids {
            tasks.push(prefix_task(other.task(id).expect("id came from other"), &other.name));
        }
    }

    Corpus::new(format!("{}+{}", ni.name, other.name), ni.format.clone(), tasks)
}

/// Cap every task at `cap` instances, sampled without replacement and kept
/// in their original order. Sampling is seeded per task, so a task keeps
/// the same subset no matter what else is in the corpus.
pub fn cap_instances(corpus: &Corpus, cap: usize, rng_seed: u64) -> Result<Corpus> {
    if cap == 0 {
        return Err(Error::validation("instance cap must be at least 1"));
    }
    let mut tasks = Vec::with_capacity(corpus.tasks.len());
    for task in &corpus.tasks {
        let mut task = task.clone();
        if task.instances.len() > cap {
            let mut rng =
                ChaCha8Rng::seed_from_u64(stable_seed(rng_seed, &["cap", &task.task_id]));
            let mut picked = rand::seq::index::sample(&mut rng, task.instances.len(), cap)
                .into_vec();
            picked.sort_unstable();
            task.instances = picked.into_iter().map(|i| task.instances[i].clone()).collect();
        }
        tasks.push(task);
    }
    Ok(Corpus { name: corpus.name.clone(), format: corpus.format.clone(), tasks })
}

/// One instruction-simplification training pair. The direction is
/// deliberately reversed: the model generation (simple form) is the source
/// and the original complex instruction is the target, so a trainer learns
/// simple → complex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillPair {
    pub source_text: String,
    pub target_text: String,
    pub origin_task_id: String,
}

#[derive(Clone, Debug)]
pub struct DistillParams {
    /// Stop once this many pairs exist.
    pub target_count: usize,
    /// Completions requested per task before moving to the next.
    pub generations_per_task: u32,
    pub rng_seed: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Concurrent in-flight completion requests.
    pub workers: usize,
}

impl Default for DistillParams {
    fn default() -> Self {
        DistillParams {
            target_count: 3000,
            generations_per_task: 4,
            rng_seed: 0,
            temperature: 1.0,
            max_tokens: 256,
            workers: 4,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistillStats {
    pub pairs_emitted: usize,
    pub generations_requested: usize,
    pub skipped_empty: usize,
    pub tasks_used: usize,
    /// True when the corpus ran out before `target_count` pairs existed.
    pub shortfall: bool,
}

/// Convert task-level instructions to a simpler format via the backend and
/// emit reversed training pairs. Tasks are visited in seeded-shuffle order
/// and generation stops at exactly `target_count` pairs; empty generations
/// are skipped and counted. A shortfall emits what exists and flags it.
pub fn build_distill_pairs(
    corpus: &Corpus,
    backend: &dyn CompletionBackend,
    seeds: &[ParallelSeedPair],
    params: &DistillParams,
) -> Result<(Vec<DistillPair>, DistillStats)> {
    if params.target_count == 0 {
        return Err(Error::validation("distill target_count must be at least 1"));
    }
    if params.generations_per_task == 0 {
        return Err(Error::validation("distill generations_per_task must be at least 1"));
    }
    if !matches!(corpus.format, FormatSpec::Task { .. }) {
        return Err(Error::validation(format!(
            "distillation needs a task-level corpus; {} is {} level",
            corpus.name,
            corpus.format.level()
        )));
    }

    let mut order: Vec<usize> = (0..corpus.tasks.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(stable_seed(params.rng_seed, &["distill"]));
    order.shuffle(&mut rng);

    // one slot per (task, generation); processed in deterministic order
    struct Slot<'a> {
        task: &'a UnifiedTask,
        instruction: String,
        generation_index: u32,
    }
    let mut slots = Vec::with_capacity(order.len() * params.generations_per_task as usize);
    for task_index in order {
        let task = &corpus.tasks[task_index];
        let instruction = crate::schema::instruction_text(
            task,
            &task.source_format,
            ExampleBudget::default().clamped(task),
        )?;
        for j in 0..params.generations_per_task {
            slots.push(Slot { task, instruction: instruction.clone(), generation_index: j });
        }
    }

    let mut pairs = Vec::with_capacity(params.target_count.min(slots.len()));
    let mut stats = DistillStats::default();
    let mut tasks_used = BTreeSet::new();
    let batch = params.workers.max(1);
    let mut cursor = 0;
    while cursor < slots.len() && pairs.len() < params.target_count {
        let chunk = &slots[cursor..(cursor + batch).min(slots.len())];
        cursor += chunk.len();
        let generations: Vec<Result<String>> =
            ordered_parallel_map(chunk, batch, |_, slot| {
                let request = CompletionRequest {
                    request_id: format!("{}:d{}", slot.task.task_id, slot.generation_index),
                    prompt: build_transfer_prompt(seeds, &slot.instruction)?,
                    n: 1,
                    max_tokens: params.max_tokens,
                    temperature: params.temperature,
                    stop: vec![TRANSFER_STOP.to_string()],
                    seed: Some(stable_seed(
                        params.rng_seed,
                        &["distill", &slot.task.task_id, &slot.generation_index.to_string()],
                    )),
                };
                Ok(backend.complete(&request)?.remove(0))
            });
        for (slot, generation) in chunk.iter().zip(generations) {
            let generation = generation?;
            stats.generations_requested += 1;
            if pairs.len() >= params.target_count {
                continue;
            }
            let simple = generation.trim();
            if simple.is_empty() {
                stats.skipped_empty += 1;
                continue;
            }
            tasks_used.insert(slot.task.task_id.clone());
            pairs.push(DistillPair {
                source_text: simple.to_string(),
                target_text: slot.instruction.clone(),
                origin_task_id: slot.task.task_id.clone(),
            });
        }
    }

    stats.pairs_emitted = pairs.len();
    stats.tasks_used = tasks_used.len();
    stats.shortfall = pairs.len() < params.target_count;
    pairs.sort_by(|a, b| a.origin_task_id.cmp(&b.origin_task_id));
    Ok((pairs, stats))
}

/// Write distill pairs as JSON-Lines.
fn create_parent_dirs(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e)),
        None => Ok(()),
    }
}

pub fn write_distill_pairs(pairs: &[DistillPair], path: &Path) -> Result<()> {
    create_parent_dirs(path)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for pair in pairs {
        let line = serde_json::to_string(pair)
            .map_err(|e| Error::json(format!("encoding pair for {}", pair.origin_task_id), e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Write the trainer hand-off config next to a distill pairs file. The
/// values are the defaults an external seq2seq trainer should start from;
/// the file is documentation, not something this crate consumes.
pub fn write_train_config(path: &Path, pairs_file: &str) -> Result<()> {
    let text = format!(
        "# Fine-tuning hand-off for the instruction simplification pairs.\n\
         # Consumed by an external seq2seq trainer; this tool only writes it.\n\
         pairs_file = {pairs_file}\n\
         max_source_length = 1024\n\
         max_target_length = 128\n\
         per_task_cap = 100\n\
         batch_size = 16\n\
         learning_rate = 1e-5\n\
         epochs = 2\n\
         schedule = linear\n\
         warmup_steps = 1000\n"
    );
    create_parent_dirs(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use crate::schema::{ComponentMask, TaskInstance};

    fn task(id: &str, level: &FormatSpec, instances: Vec<TaskInstance>) -> UnifiedTask {
        match level {
            FormatSpec::Task { mask } => UnifiedTask {
                task_id: id.into(),
                source_format: FormatSpec::Task { mask: *mask },
                definition: Some(format!("Definition text for {id}.")),
                positives: vec![crate::schema::DemonstrationExample::new("in", "out")],
                instances,
                ..UnifiedTask::default()
            },
            _ => UnifiedTask {
                task_id: id.into(),
                source_format: FormatSpec::instance(Some("Do it: {input}".into())).unwrap(),
                instances,
                ..UnifiedTask::default()
            },
        }
    }

    fn inst(id: &str, input: &str, reference: &str) -> TaskInstance {
        TaskInstance::new(id, input, vec![reference.to_string()])
    }

    fn dp() -> FormatSpec {
        FormatSpec::Task { mask: ComponentMask::DP }
    }

    #[test]
    fn corpus_rejects_duplicate_ids_and_level_mismatch() {
        let t1 = task("a", &dp(), vec![inst("i1", "x", "y")]);
        let err = Corpus::new("c", dp(), vec![t1.clone(), t1.clone()]).unwrap_err();
        assert!(err.to_string().contains("duplicate task id a"), "{err}");

        let t2 = task("b", &FormatSpec::Instance { template: None }, vec![inst("i1", "x", "y")]);
        let err = Corpus::new("c", dp(), vec![t2]).unwrap_err();
        assert!(err.to_string().contains("instance level"), "{err}");
    }

    #[test]
    fn corpus_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.jsonl");
        let corpus = Corpus::new(
            "tiny",
            dp(),
            vec![
                task("b", &dp(), vec![inst("i1", "x", "y")]),
                task("a", &dp(), vec![inst("i1", "p", "q"), inst("i2", "r", "s")]),
            ],
        )
        .unwrap();
        write_corpus(&corpus, &path).unwrap();
        let back = read_corpus(&path, &dp()).unwrap();
        assert_eq!(back.name, "tiny");
        // written sorted by task id
        assert_eq!(back.tasks[0].task_id, "a");
        assert_eq!(back.tasks[1].task_id, "b");
        assert_eq!(back.tasks[1], corpus.tasks[0]);

        // and the bytes are stable across a rewrite
        let again = dir.path().join("again.jsonl");
        write_corpus(&back, &again).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&again).unwrap()
        );
    }

    #[test]
    fn read_corpus_reports_file_and_line_on_bad_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"task_id\": \"a\"\n").unwrap();
        let err = read_corpus(&path, &dp()).unwrap_err();
        assert!(err.to_string().contains("bad.jsonl:1"), "{err}");
    }

    #[test]
    fn leakage_filter_removes_normalized_matches() {
        let train = Corpus::new(
            "train",
            dp(),
            vec![
                task(
                    "a",
                    &dp(),
                    vec![
                        inst("i1", "The  Cat's   mat.", "on the mat"),
                        inst("i2", "unrelated input", "unrelated ref"),
                    ],
                ),
                task("b", &dp(), vec![inst("i1", "shared input", "shared ref")]),
            ],
        )
        .unwrap();
        let test = Corpus::new(
            "test",
            dp(),
            vec![task(
                "t",
                &dp(),
                vec![inst("x1", "cat s mat", "ON THE MAT!"), inst("x2", "shared input", "shared ref")],
            )],
        )
        .unwrap();

        let (filtered, report) = filter_leakage(&train, &test);
        assert_eq!(report.instances_removed, 2);
        assert_eq!(report.removals.len(), 2);
        assert_eq!(report.tasks_dropped, vec!["b".to_string()]);
        assert_eq!(filtered.tasks.len(), 1);
        assert_eq!(filtered.tasks[0].instances.len(), 1);
        assert_eq!(filtered.tasks[0].instances[0].instance_id, "i2");

        // post-filter disjointness
        let test_pairs: BTreeSet<_> = test
            .tasks
            .iter()
            .flat_map(|t| &t.instances)
            .map(|i| leakage_key(&i.input, &i.references[0]))
            .collect();
        for t in &filtered.tasks {
            for i in &t.instances {
                assert!(!test_pairs.contains(&leakage_key(&i.input, &i.references[0])));
            }
        }
    }

    #[test]
    fn leakage_filter_is_a_no_op_on_disjoint_corpora() {
        let train =
            Corpus::new("train", dp(), vec![task("a", &dp(), vec![inst("i1", "x", "y")])]).unwrap();
        let test =
            Corpus::new("test", dp(), vec![task("t", &dp(), vec![inst("i1", "p", "q")])]).unwrap();
        let (filtered, report) = filter_leakage(&train, &test);
        assert_eq!(report.instances_removed, 0);
        assert!(report.removals.is_empty());
        assert_eq!(filtered.tasks, train.tasks);
    }

    fn many_tasks(prefix: &str, n: usize, level: &FormatSpec) -> Vec<UnifiedTask> {
        (0..n)
            .map(|i| {
                task(
                    &format!("{prefix}{i:03}"),
                    level,
                    vec![inst("i1", &format!("input {i}"), &format!("ref {i}"))],
                )
            })
            .collect()
    }

    #[test]
    fn mixture_sizes_and_groups() {
        // ni: t000..t029; other: t000..t049 (30 shared, 20 disjoint)
        let ni = Corpus::new("ni", dp(), many_tasks("t", 30, &dp())).unwrap();
        let other = Corpus::new("p", dp(), many_tasks("t", 50, &dp())).unwrap();

        let cfg = MixtureConfig {
            src_task_count: 20,
            include_same: true,
            include_diff: false,
            rng_seed: 11,
        };
        let mix = build_mixture(&ni, &other, &cfg).unwrap();
        assert_eq!(mix.tasks.len(), 40);
        let src: Vec<_> = mix.tasks.iter().filter(|t| t.task_id.starts_with("ni:")).collect();
        let same: Vec<_> = mix.tasks.iter().filter(|t| t.task_id.starts_with("p:")).collect();
        assert_eq!(src.len(), 20);
        assert_eq!(same.len(), 20);
        let src_ids: BTreeSet<_> = src.iter().map(|t| t.task_id.trim_start_matches("ni:")).collect();
        let same_ids: BTreeSet<_> = same.iter().map(|t| t.task_id.trim_start_matches("p:")).collect();
        assert_eq!(src_ids, same_ids);

        let cfg_all = MixtureConfig { include_diff: true, ..cfg.clone() };
        let mix_all = build_mixture(&ni, &other, &cfg_all).unwrap();
        assert_eq!(mix_all.tasks.len(), 60);
        let diff_ids: BTreeSet<String> = mix_all
            .tasks
            .iter()
            .filter(|t| t.task_id.starts_with("p:"))
            .map(|t| t.task_id.trim_start_matches("p:").to_string())
            .filter(|id| !src_ids.contains(id.as_str()))
            .collect();
        assert_eq!(diff_ids.len(), 20);
        assert!(diff_ids.iter().all(|id| !src_ids.contains(id.as_str())));

        // same seed picks the same src set regardless of enabled groups
        let cfg_src_only =
            MixtureConfig { include_same: false, include_diff: false, ..cfg.clone() };
        let src_only = build_mixture(&ni, &other, &cfg_src_only).unwrap();
        assert_eq!(src_only.tasks.len(), 20);
        let only_ids: BTreeSet<_> =
            src_only.tasks.iter().map(|t| t.task_id.trim_start_matches("ni:").to_string()).collect();
        assert_eq!(only_ids, src_ids.iter().map(|s| s.to_string()).collect());

        // determinism
        let again = build_mixture(&ni, &other, &cfg_all).unwrap();
        assert_eq!(mix_all, again);
    }

    #[test]
    fn mixture_errors_when_pools_are_too_small() {
        let ni = Corpus::new("ni", dp(), many_tasks("t", 10, &dp())).unwrap();
        let other = Corpus::new("p", dp(), many_tasks("t", 12, &dp())).unwrap();
        let cfg = MixtureConfig {
            src_task_count: 20,
            include_same: false,
            include_diff: false,
            rng_seed: 0,
        };
        let err = build_mixture(&ni, &other, &cfg).unwrap_err();
        assert!(err.to_string().contains("shared"), "{err}");

        let cfg = MixtureConfig { src_task_count: 10, include_diff: true, ..cfg };
        let err = build_mixture(&ni, &other, &cfg).unwrap_err();
        assert!(err.to_string().contains("outside the src set"), "{err}");
    }

    #[test]
    fn cap_preserves_order_and_is_idempotent() {
        let instances: Vec<TaskInstance> =
            (0..25).map(|i| inst(&format!("i{i:02}"), &format!("in {i}"), "r")).collect();
        let corpus = Corpus::new("c", dp(), vec![task("a", &dp(), instances)]).unwrap();

        let capped = cap_instances(&corpus, 10, 42).unwrap();
        assert_eq!(capped.tasks[0].instances.len(), 10);
        // original relative order is preserved
        let ids: Vec<_> = capped.tasks[0].instances.iter().map(|i| i.instance_id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);

        let again = cap_instances(&capped, 10, 42).unwrap();
        assert_eq!(capped, again, "capping an already-capped corpus changes nothing");
        let below = cap_instances(&corpus, 100, 42).unwrap();
        assert_eq!(below, corpus, "cap above size changes nothing");

        // per-task seeding: the subset does not depend on corpus company
        let bigger = Corpus::new(
            "c2",
            dp(),
            vec![task("zzz", &dp(), vec![inst("i1", "x", "y")]), corpus.tasks[0].clone()],
        )
        .unwrap();
        let capped2 = cap_instances(&bigger, 10, 42).unwrap();
        assert_eq!(capped2.tasks[1].instances, capped.tasks[0].instances);
    }

    fn distill_seeds() -> Vec<ParallelSeedPair> {
        vec![ParallelSeedPair::new(
            "d1",
            "Definition: Pick the larger number.",
            "Pick the larger of: {input}",
        )
        .unwrap()]
    }

    #[test]
    fn distill_pairs_reverse_the_direction() {
        let tasks = many_tasks("t", 5, &dp());
        let corpus = Corpus::new("complex", dp(), tasks).unwrap();
        let backend = MockBackend::echo();
        let params = DistillParams { target_count: 12, generations_per_task: 3, ..DistillParams::default() };
        let (pairs, stats) = build_distill_pairs(&corpus, &backend, &distill_seeds(), &params).unwrap();

        assert_eq!(pairs.len(), 12);
        assert_eq!(stats.pairs_emitted, 12);
        assert!(!stats.shortfall);
        for pair in &pairs {
            let origin = corpus.task(&pair.origin_task_id).unwrap();
            let instruction = crate::schema::instruction_text(
                origin,
                &origin.source_format,
                ExampleBudget::default().clamped(origin),
            )
            .unwrap();
            // the echo mock returns the source text, so both sides equal the
            // original instruction — which is exactly the reversal contract
            // for target_text
            assert_eq!(pair.target_text, instruction);
            assert_eq!(pair.source_text, instruction);
        }
        // sorted by origin task id
        let ids: Vec<_> = pairs.iter().map(|p| p.origin_task_id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn distill_shortfall_is_flagged_not_fatal() {
        let corpus = Corpus::new("complex", dp(), many_tasks("t", 10, &dp())).unwrap();
        let backend = MockBackend::echo();
        let params = DistillParams { target_count: 50, generations_per_task: 3, ..DistillParams::default() };
        let (pairs, stats) = build_distill_pairs(&corpus, &backend, &distill_seeds(), &params).unwrap();
        assert_eq!(pairs.len(), 30);
        assert!(stats.shortfall);
        assert_eq!(stats.tasks_used, 10);
    }

    #[test]
    fn distill_is_deterministic_and_stops_exactly_at_target() {
        let corpus = Corpus::new("complex", dp(), many_tasks("t", 40, &dp())).unwrap();
        let backend = MockBackend::echo();
        let params = DistillParams { target_count: 17, generations_per_task: 2, ..DistillParams::default() };
        let (a, stats_a) = build_distill_pairs(&corpus, &backend, &distill_seeds(), &params).unwrap();
        let (b, _) = build_distill_pairs(&corpus, &backend, &distill_seeds(), &params).unwrap();
        assert_eq!(a.len(), 17);
        assert_eq!(a, b);
        assert!(!stats_a.shortfall);

        // different worker counts change nothing
        let params_w1 = DistillParams { workers: 1, ..params.clone() };
        let (c, _) = build_distill_pairs(&corpus, &backend, &distill_seeds(), &params_w1).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn distill_rejects_non_task_corpora() {
        let level = FormatSpec::Instance { template: None };
        let tasks = many_tasks("t", 3, &level);
        let corpus = Corpus::new("simple", FormatSpec::instance(None).unwrap(), tasks).unwrap();
        let backend = MockBackend::echo();
        let err = build_distill_pairs(&corpus, &backend, &distill_seeds(), &DistillParams::default())
            .unwrap_err();
        assert!(err.to_string().contains("task-level"), "{err}");
    }

    #[test]
    fn train_config_stub_carries_the_handoff_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.toml");
        write_train_config(&path, "pairs.jsonl").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for needle in [
            "pairs_file = pairs.jsonl",
            "max_source_length = 1024",
            "max_target_length = 128",
            "batch_size = 16",
            "learning_rate = 1e-5",
            "epochs = 2",
            "schedule = linear",
            "warmup_steps = 1000",
            "per_task_cap = 100",
        ] {
            assert!(text.contains(needle), "missing {needle}");
        }
    }
}
