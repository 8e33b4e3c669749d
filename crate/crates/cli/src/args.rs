//! Command-line surface. Format codes are component-mask letters for
//! task-level corpora (`DP`, `DPNE`, ...) or the literal level names
//! `instance` / `keywords`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "instrux", version, about = "Instruction-format conversion and evaluation pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub globals: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Backend profile file (TOML).
    #[arg(long, global = true, default_value = "configs/backends.toml")]
    pub config: PathBuf,

    /// Backend profile name from the config file. Required by commands
    /// that call a model (convert --mode llm, distill).
    #[arg(long, global = true)]
    pub backend: Option<String>,

    /// Response cache directory for HTTP backends.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,

    /// Upper bound on tasks processed in parallel.
    #[arg(long, global = true, default_value_t = 4)]
    pub concurrency: usize,

    /// Base seed; every sampling decision derives from it deterministically.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Validate inputs and print the plan without writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,

    /// Log filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a corpus from its source format into a target format.
    Convert(ConvertArgs),
    /// Score a predictions file against a reference corpus.
    Evaluate(EvaluateArgs),
    /// Remove training instances that also appear in a test corpus.
    Filter(FilterArgs),
    /// Mix tasks from two corpora into one training corpus.
    Mix(MixArgs),
    /// Build simple-to-complex instruction pairs for distillation.
    Distill(DistillArgs),
    /// Re-render a machine-readable evaluation report as a table.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConvertMode {
    /// Rule-based conversion: copy shared components, blank the rest.
    Heuristic,
    /// Few-shot model conversion with perplexity-based selection.
    Llm,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Source corpus (JSON-Lines).
    #[arg(long)]
    pub input: PathBuf,

    /// Format code of the source corpus.
    #[arg(long)]
    pub source_format: String,

    /// Format code to convert into.
    #[arg(long)]
    pub target_format: String,

    /// Output corpus path.
    #[arg(long)]
    pub output: PathBuf,

    /// Per-record transfer report path (default: <output stem>.report.jsonl).
    #[arg(long)]
    pub report: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = ConvertMode::Heuristic)]
    pub mode: ConvertMode,

    /// Seed parallel-pair file (JSON-Lines), llm mode only.
    #[arg(long)]
    pub seeds: Option<PathBuf>,

    /// Candidates sampled per record in llm mode.
    #[arg(long, default_value_t = 8)]
    pub n_samples: u32,

    /// Accept an --n-samples value outside the standard menu.
    #[arg(long)]
    pub allow_any_n: bool,

    /// Sampling temperature for llm mode.
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,

    /// Completion budget per candidate.
    #[arg(long, default_value_t = 1024)]
    pub max_tokens: u32,

    /// Keep the k best candidates per record instead of the single best;
    /// extra variants get a `.v<rank>` task-id suffix.
    #[arg(long)]
    pub train_time: bool,

    /// How many candidates --train-time keeps.
    #[arg(long, default_value_t = 2)]
    pub keep: usize,

    /// Worked examples scored per candidate.
    #[arg(long, default_value_t = 2)]
    pub max_examples: usize,

    /// Positive examples the heuristic synthesizes when the target needs
    /// them and the source has none.
    #[arg(long, default_value_t = 2)]
    pub num_pos: usize,

    /// Fail (exit 3) when more than this fraction of records fell back to
    /// the heuristic in llm mode.
    #[arg(long, default_value_t = 0.2)]
    pub fallback_threshold: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions file: JSON-Lines {task_id, instance_id, prediction}.
    #[arg(long)]
    pub predictions: PathBuf,

    /// Reference corpus (JSON-Lines).
    #[arg(long)]
    pub references: PathBuf,

    /// Format code of the reference corpus.
    #[arg(long)]
    pub format: String,

    /// Machine-readable report output (JSON).
    #[arg(long)]
    pub report: PathBuf,

    /// Fail on predictions that join to no corpus instance.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Training corpus to filter (JSON-Lines).
    #[arg(long)]
    pub train: PathBuf,

    /// Format code of the training corpus.
    #[arg(long)]
    pub train_format: String,

    /// Test corpus whose instances must not leak into training.
    #[arg(long)]
    pub test: PathBuf,

    /// Format code of the test corpus.
    #[arg(long)]
    pub test_format: String,

    /// Filtered corpus output path.
    #[arg(long)]
    pub output: PathBuf,

    /// Removal report path (default: <output stem>.report.json).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Primary corpus: mixture task ids and `same` bodies come from here.
    #[arg(long)]
    pub ni: PathBuf,

    /// Format code of the primary corpus.
    #[arg(long)]
    pub ni_format: String,

    /// Secondary corpus: `same` ids and `diff` tasks come from here.
    #[arg(long)]
    pub other: PathBuf,

    /// Format code of the secondary corpus.
    #[arg(long)]
    pub other_format: String,

    /// Tasks sampled from the primary corpus.
    #[arg(long, default_value_t = 20)]
    pub src: usize,

    /// Include the same tasks in the secondary corpus's format.
    #[arg(long)]
    pub same: bool,

    /// Include as many distinct secondary-corpus tasks.
    #[arg(long)]
    pub diff: bool,

    /// Output corpus path.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    /// Task-level corpus supplying the complex instructions.
    #[arg(long)]
    pub input: PathBuf,

    /// Format code of the input corpus (a component mask).
    #[arg(long)]
    pub format: String,

    /// Seed parallel-pair file (JSON-Lines).
    #[arg(long)]
    pub seeds: PathBuf,

    /// Output pair file (JSON-Lines).
    #[arg(long)]
    pub output: PathBuf,

    /// Pairs to produce.
    #[arg(long, default_value_t = 3000)]
    pub count: usize,

    /// Completions requested per task before moving to the next.
    #[arg(long, default_value_t = 4)]
    pub gens_per_task: u32,

    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,

    #[arg(long, default_value_t = 256)]
    pub max_tokens: u32,

    /// Also write a fine-tuning config (TOML) pointing at the pair file.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Machine-readable evaluation report produced by `evaluate`.
    #[arg(long)]
    pub report: PathBuf,
}
