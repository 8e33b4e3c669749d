//! Shared fixture builders for the criterion benchmarks.

use instrux_core::schema::{ComponentMask, FormatSpec};
use instrux_core::synth::{synth_corpus, SynthConfig};
use instrux_core::transfer::TransferCandidate;

pub fn task_level_corpus(num_tasks: usize, seed: u64) -> instrux_core::corpus::Corpus {
    let cfg = SynthConfig {
        format: FormatSpec::Task { mask: ComponentMask::DPNE },
        num_tasks,
        instances_per_task: 6,
        seed,
        ..SynthConfig::default()
    };
    synth_corpus("bench", &cfg).expect("synth corpus")
}

pub fn instance_level_corpus(num_tasks: usize, seed: u64) -> instrux_core::corpus::Corpus {
    let cfg = SynthConfig {
        format: FormatSpec::Instance { template: None },
        num_tasks,
        instances_per_task: 6,
        seed,
        ..SynthConfig::default()
    };
    synth_corpus("bench", &cfg).expect("synth corpus")
}

/// Candidate sets with only the fields selection reads.
pub fn scored_candidates(n: u32) -> Vec<TransferCandidate> {
    (0..n)
        .map(|i| TransferCandidate {
            sample_index: i,
            sampling_seed: i as u64,
            raw_generation: String::new(),
            parsed: None,
            parse_error: None,
            ppl: Some(1.0 + ((i * 7919) % 100) as f64 / 25.0),
        })
        .collect()
}
