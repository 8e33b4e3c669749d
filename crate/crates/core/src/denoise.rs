//! Perplexity-based denoising of transfer candidates.
//!
//! Sampling several transfer candidates and keeping the ones a language
//! model finds least perplexing filters out garbled conversions. Each
//! candidate's instruction is rendered against worked examples and the
//! example outputs are scored as continuations; a candidate's perplexity is
//! the arithmetic mean over those examples. At test time the single argmin
//! candidate survives; at train time the best `k` do.

use serde::{Deserialize, Serialize};

use crate::backend::{ScoreBackend, ScoreRequest};
use crate::error::{Error, Result};
use crate::schema::DemonstrationExample;
use crate::transfer::TransferCandidate;

/// Perplexity of a token sequence from its log-probabilities:
/// `exp(-mean(logprobs))`. Lower is better; 1.0 means certainty.
pub fn perplexity(token_logprobs: &[f64]) -> Result<f64> {
    if token_logprobs.is_empty() {
        return Err(Error::validation("perplexity of an empty token sequence is undefined"));
    }
    let mut sum = 0.0;
    for (i, lp) in token_logprobs.iter().enumerate() {
        if !lp.is_finite() {
            return Err(Error::validation(format!(
                "non-finite logprob {lp} at token {i}"
            )));
        }
        sum += lp;
    }
    Ok((-sum / token_logprobs.len() as f64).exp())
}

/// Perplexity of one candidate measured on worked examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub sample_index: u32,
    /// Mean perplexity across the scored examples.
    pub ppl: f64,
    /// Per-example perplexities, in example order.
    pub per_example: Vec<f64>,
    /// Total continuation tokens scored.
    pub token_count: usize,
    /// False when any example's tokenization straddled the prefix boundary.
    pub exact_alignment: bool,
}

/// Score one parsed candidate against up to `max_examples` examples.
///
/// For each example the candidate's instruction text is rendered with the
/// example input as a prompt prefix, and the example output is scored as
/// its continuation. `request_tag` namespaces the backend request ids.
pub fn score_candidate(
    scorer: &dyn ScoreBackend,
    candidate: &TransferCandidate,
    examples: &[DemonstrationExample],
    max_examples: usize,
    request_tag: &str,
) -> Result<CandidateScore> {
    let fragment = candidate.parsed.as_ref().ok_or_else(|| {
        Error::validation(format!(
            "candidate {} has no parsed fragment to score",
            candidate.sample_index
        ))
    })?;
    if max_examples == 0 {
        return Err(Error::validation("max_examples must be at least 1"));
    }
    let examples = &examples[..examples.len().min(max_examples)];
    if examples.is_empty() {
        return Err(Error::validation(
            "scoring requires at least one worked example",
        ));
    }

    let mut per_example = Vec::with_capacity(examples.len());
    let mut token_count = 0;
    let mut exact_alignment = true;
    for (i, example) in examples.iter().enumerate() {
        let request = ScoreRequest {
            request_id: format!("{request_tag}:s{}:e{i}", candidate.sample_index),
            prefix: fragment.scoring_prefix(&example.input),
            continuation: format!(" {}", example.output),
        };
        let response = scorer.score(&request)?;
        token_count += response.token_count;
        exact_alignment &= response.exact_alignment;
        per_example.push(perplexity(&response.token_logprobs)?);
    }

    Ok(CandidateScore {
        sample_index: candidate.sample_index,
        ppl: per_example.iter().sum::<f64>() / per_example.len() as f64,
        per_example,
        token_count,
        exact_alignment,
    })
}

/// Test-time selection: the index (into `candidates`) of the scored
/// candidate with the lowest perplexity. Ties break toward the lowest
/// sample index; candidates without a perplexity are skipped. `None` when
/// nothing was scored — the caller's cue to fall back.
pub fn select_test_time(candidates: &[TransferCandidate]) -> Option<usize> {
    let mut best: Option<(usize, f64, u32)> = None;
    for (i, candidate) in candidates.iter().enumerate() {
        let Some(ppl) = candidate.ppl else { continue };
        let better = match best {
            None => true,
            Some((_, best_ppl, best_sample)) => {
                ppl < best_ppl || (ppl == best_ppl && candidate.sample_index < best_sample)
            }
        };
        if better {
            best = Some((i, ppl, candidate.sample_index));
        }
    }
    best.map(|(i, _, _)| i)
}

/// Train-time selection: indices of the `k` lowest-perplexity candidates,
/// ordered best first (ties toward the lowest sample index). Returns fewer
/// than `k` when fewer were scored.
pub fn select_train_time(candidates: &[TransferCandidate], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::validation("train-time selection requires k >= 1"));
    }
    let mut scored: Vec<(usize, f64, u32)> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.ppl.map(|ppl| (i, ppl, c.sample_index)))
        .collect();
    scored.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("perplexities are finite")
            .then(a.2.cmp(&b.2))
    });
    Ok(scored.into_iter().take(k).map(|(i, _, _)| i).collect())
}
