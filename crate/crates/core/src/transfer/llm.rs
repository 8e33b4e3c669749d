//! Few-shot format transfer through a completion backend: build the
//! parallel-example prompt, sample it n times with distinct seeds, parse
//! each completion into a candidate.

use crate::backend::{CompletionBackend, CompletionRequest};
use crate::error::{Error, Result};
use crate::schema::FormatSpec;
use crate::transfer::candidate::{parse_candidate, TransferCandidate};
use crate::transfer::prompt::{build_transfer_prompt, ParallelSeedPair, TRANSFER_STOP};
use crate::util::ordered_parallel_map;

/// Sample counts supported without an explicit override.
pub const DEFAULT_N_CHOICES: [u32; 6] = [1, 2, 4, 8, 16, 32];

#[derive(Clone, Debug)]
pub struct TransferParams {
    /// How many candidates to sample.
    pub n_samples: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Sample i uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Accept an `n_samples` outside [`DEFAULT_N_CHOICES`].
    pub allow_any_n: bool,
}

impl Default for TransferParams {
    fn default() -> Self {
        TransferParams {
            n_samples: 8,
            temperature: 1.0,
            max_tokens: 1024,
            base_seed: 0,
            allow_any_n: false,
        }
    }
}

impl TransferParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples must be at least 1"));
        }
        if !self.allow_any_n && !DEFAULT_N_CHOICES.contains(&self.n_samples) {
            return Err(Error::validation(format!(
                "n_samples {} is not one of {:?}; pass the any-n override to use it",
                self.n_samples, DEFAULT_N_CHOICES
            )));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::validation(format!(
                "temperature must be finite and non-negative, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(Error::validation("max_tokens must be at least 1"));
        }
        Ok(())
    }
}

/// Sample `params.n_samples` conversions of `source_text` into `target`
/// format. Requests go out one per sample (so each carries its own seed
/// and cache entry) and may run concurrently; the result is always in
/// sample-index order and always has exactly `n_samples` entries — parse
/// failures are values on the candidate, not errors.
///
/// `request_tag` namespaces request ids, e.g. a task id; sample i becomes
/// request `"{tag}:s{i}"`.
pub fn llm_transfer(
    backend: &dyn CompletionBackend,
    seeds: &[ParallelSeedPair],
    source_text: &str,
    target: &FormatSpec,
    params: &TransferParams,
    request_tag: &str,
) -> Result<Vec<TransferCandidate>> {
    params.validate()?;
    target.validate()?;
    let prompt = build_transfer_prompt(seeds, source_text)?;

    let indices: Vec<u32> = (0..params.n_samples).collect();
    let raw: Vec<Result<(u64, String)>> =
        ordered_parallel_map(&indices, params.n_samples as usize, |_, &i| {
            let sampling_seed = params.base_seed + u64::from(i);
            let request = CompletionRequest {
                request_id: format!("{request_tag}:s{i}"),
                prompt: prompt.clone(),
                n: 1,
                max_tokens: params.max_tokens,
                temperature: params.temperature,
                stop: vec![TRANSFER_STOP.to_string()],
                seed: Some(sampling_seed),
            };
            let mut texts = backend.complete(&request)?;
            debug_assert_eq!(texts.len(), 1, "n=1 request returns one choice");
            Ok((sampling_seed, texts.remove(0)))
        });

    let mut candidates = Vec::with_capacity(raw.len());
    for (i, item) in raw.into_iter().enumerate() {
        let (sampling_seed, text) = item?;
        let candidate = match parse_candidate(&text, target) {
            Ok(fragment) => TransferCandidate {
                sample_index: i as u32,
                sampling_seed,
                raw_generation: text,
                parsed: Some(fragment),
                parse_error: None,
                ppl: None,
            },
            Err(diagnostic) => TransferCandidate {
                sample_index: i as u32,
                sampling_seed,
                raw_generation: text,
                parsed: None,
                parse_error: Some(diagnostic),
                ppl: None,
            },
        };
        candidates.push(candidate);
    }

    if candidates.iter().all(|c| c.raw_generation.trim().is_empty()) {
        return Err(Error::format(format!(
            "{request_tag}: all {} completions were empty",
            params.n_samples
        )));
    }
    Ok(candidates)
}
