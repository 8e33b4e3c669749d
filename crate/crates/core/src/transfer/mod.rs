//! Format transfer: few-shot prompting, candidate parsing, and the
//! rule-based baseline.

pub mod candidate;
pub mod heuristic;
pub mod llm;
pub mod prompt;

pub use candidate::{parse_candidate, TaskFragment, TransferCandidate};
pub use heuristic::{heuristic_transfer, FALLBACK_TEMPLATE};
pub use llm::{llm_transfer, TransferParams, DEFAULT_N_CHOICES};
pub use prompt::{build_transfer_prompt, load_seed_pairs, ParallelSeedPair, TRANSFER_STOP};
