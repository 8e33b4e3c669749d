//! Deterministic in-process backend for tests, dry runs, and offline
//! pipelines. Completions and scores are pure functions of the request, so
//! a pipeline wired to the mock is reproducible byte-for-byte.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

use crate::error::BackendError;

use super::{
    truncate_at_stop, BackendResult, CompletionBackend, CompletionRequest, ScoreBackend,
    ScoreRequest, ScoreResponse,
};

/// How the mock produces completion text.
#[derive(Clone, Debug)]
pub enum MockMode {
    /// Always return this text.
    Fixed(String),
    /// Echo the source block of a transfer prompt: the text after the last
    /// `Task description A: ` label, up to the following `Task description
    /// B:` label. Falls back to the whole prompt when the labels are absent.
    EchoSource,
    /// Render a template per sample. `{seed}` expands to the request seed,
    /// `{sample}` to the sample index, `{hash8}` to eight hex characters
    /// derived from (prompt, seed, sample), and `{source}` to the echoed
    /// source block. `\n` sequences in the template become newlines.
    Template(String),
    /// Exact prompt-to-text table; unknown prompts are a protocol error.
    /// Handy for pinning single interactions in unit tests.
    Map(HashMap<String, String>),
}

pub struct MockBackend {
    mode: MockMode,
    /// Scales the magnitude of mock token logprobs.
    logprob_scale: f64,
    completion_calls: AtomicUsize,
    score_calls: AtomicUsize,
}

fn hash64(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
        hasher.update([0x1f]);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Extract the last `Task description A:` block from a transfer prompt.
fn echo_source(prompt: &str) -> String {
    const SOURCE_LABEL: &str = "Task description A: ";
    const TARGET_LABEL: &str = "\nTask description B:";
    let Some(start) = prompt.rfind(SOURCE_LABEL) else {
        return prompt.trim().to_string();
    };
    let tail = &prompt[start + SOURCE_LABEL.len()..];
    match tail.find(TARGET_LABEL) {
        Some(end) => tail[..end].to_string(),
        None => tail.trim_end().to_string(),
    }
}

impl MockBackend {
    pub fn new(mode: MockMode) -> Self {
        MockBackend {
            mode,
            logprob_scale: 1.0,
            completion_calls: AtomicUsize::new(0),
            score_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_logprob_scale(mut self, scale: f64) -> Self {
        self.logprob_scale = scale;
        self
    }

    pub fn echo() -> Self {
        MockBackend::new(MockMode::EchoSource)
    }

    pub fn fixed(text: impl Into<String>) -> Self {
        MockBackend::new(MockMode::Fixed(text.into()))
    }

    pub fn template(template: impl Into<String>) -> Self {
        MockBackend::new(MockMode::Template(template.into()))
    }

    pub fn completion_calls(&self) -> usize {
        self.completion_calls.load(Ordering::SeqCst)
    }

    pub fn score_calls(&self) -> usize {
        self.score_calls.load(Ordering::SeqCst)
    }

    fn render(&self, req: &CompletionRequest, sample: u32) -> BackendResult<String> {
        match &self.mode {
            MockMode::Fixed(text) => Ok(text.clone()),
            MockMode::EchoSource => Ok(echo_source(&req.prompt)),
            MockMode::Template(template) => {
                let seed = req.seed.unwrap_or(0);
                let hash = hash64(&[
                    req.prompt.as_bytes(),
                    &seed.to_le_bytes(),
                    &sample.to_le_bytes(),
                ]);
                Ok(template
                    .replace("\\n", "\n")
                    .replace("{seed}", &seed.to_string())
                    .replace("{sample}", &sample.to_string())
                    .replace("{hash8}", &format!("{:08x}", hash as u32))
                    .replace("{source}", &echo_source(&req.prompt)))
            }
            MockMode::Map(table) => table.get(&req.prompt).cloned().ok_or_else(|| {
                BackendError::protocol(&req.request_id, "prompt not in mock map", &req.prompt)
            }),
        }
    }
}

/// Split text into chunks whose concatenation reproduces it exactly: each
/// chunk is one whitespace run or one non-whitespace run. Stands in for a
/// real tokenizer while keeping offsets trivially exact.
pub(crate) fn mock_tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let first_is_space = rest.chars().next().expect("non-empty").is_whitespace();
        let split = rest
            .find(|c: char| c.is_whitespace() != first_is_space)
            .unwrap_or(rest.len());
        let (tok, tail) = rest.split_at(split);
        tokens.push(tok);
        rest = tail;
    }
    tokens
}

impl CompletionBackend for MockBackend {
    fn complete(&self, req: &CompletionRequest) -> BackendResult<Vec<String>> {
        req.validate()?;
        self.completion_calls.fetch_add(1, Ordering::SeqCst);
        (0..req.n)
            .map(|sample| {
                self.render(req, sample)
                    .map(|text| truncate_at_stop(&text, &req.stop))
            })
            .collect()
    }
}

impl ScoreBackend for MockBackend {
    fn score(&self, req: &ScoreRequest) -> BackendResult<ScoreResponse> {
        req.validate()?;
        self.score_calls.fetch_add(1, Ordering::SeqCst);
        let token_logprobs: Vec<f64> = mock_tokenize(&req.continuation)
            .iter()
            .enumerate()
            .map(|(i, token)| {
                let hash = hash64(&[
                    req.prefix.as_bytes(),
                    req.continuation.as_bytes(),
                    token.as_bytes(),
                    &(i as u64).to_le_bytes(),
                ]);
                // uniform in (0, 1], scaled; always a negative logprob
                -(((hash % 1000) as f64 + 1.0) / 1000.0) * self.logprob_scale
            })
            .collect();
        Ok(ScoreResponse {
            token_count: token_logprobs.len(),
            token_logprobs,
            exact_alignment: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(prompt: &str, n: u32, seed: Option<u64>) -> CompletionRequest {
        CompletionRequest {
            request_id: "t".into(),
            prompt: prompt.into(),
            n,
            max_tokens: 64,
            temperature: 1.0,
            stop: vec![],
            seed,
        }
    }

    #[test]
    fn echo_extracts_final_source_block() {
        let prompt = "Example 1.\nTask description A: old text\nTask description B: other\n\n\
                      Example 2.\nTask description A: line one\nline two\nTask description B:";
        assert_eq!(echo_source(prompt), "line one\nline two");
        assert_eq!(echo_source("no labels here"), "no labels here");
    }

    #[test]
    fn fixed_and_echo_modes_are_deterministic() {
        let mock = MockBackend::fixed("hello");
        assert_eq!(mock.complete(&request("x", 2, None)).unwrap(), vec!["hello", "hello"]);
        assert_eq!(mock.completion_calls(), 1);

        let mock = MockBackend::echo();
        let req = request("Task description A: src\nTask description B:", 1, None);
        assert_eq!(mock.complete(&req).unwrap(), vec!["src"]);
        assert_eq!(mock.complete(&req).unwrap(), mock.complete(&req).unwrap());
    }

    #[test]
    fn template_mode_varies_by_sample_and_seed() {
        let mock = MockBackend::template("gen {seed}-{sample}-{hash8}");
        let texts = mock.complete(&request("p", 3, Some(7))).unwrap();
        assert_eq!(texts.len(), 3);
        assert!(texts[0].starts_with("gen 7-0-"));
        assert!(texts[1].starts_with("gen 7-1-"));
        assert_ne!(texts[0], texts[1]);
        let again = mock.complete(&request("p", 3, Some(7))).unwrap();
        assert_eq!(texts, again);
        let other_seed = mock.complete(&request("p", 3, Some(8))).unwrap();
        assert_ne!(texts, other_seed);
    }

    #[test]
    fn template_newlines_and_stop_sequences() {
        let mock = MockBackend::template("a\\nb\nExample 9");
        let mut req = request("p", 1, None);
        req.stop = vec!["\nExample ".into()];
        assert_eq!(mock.complete(&req).unwrap(), vec!["a\nb"]);
    }

    #[test]
    fn map_mode_rejects_unknown_prompts() {
        let mut table = HashMap::new();
        table.insert("known".to_string(), "answer".to_string());
        let mock = MockBackend::new(MockMode::Map(table));
        assert_eq!(mock.complete(&request("known", 1, None)).unwrap(), vec!["answer"]);
        assert!(mock.complete(&request("unknown", 1, None)).is_err());
    }

    #[test]
    fn mock_tokenizer_reconstructs_exactly() {
        for text in ["a b  c", " leading", "trailing ", "one", "\n\nx\ty "] {
            let tokens = mock_tokenize(text);
            assert_eq!(tokens.concat(), text);
        }
        assert_eq!(mock_tokenize("a b"), vec!["a", " ", "b"]);
    }

    #[test]
    fn scores_are_deterministic_negative_and_input_sensitive() {
        let mock = MockBackend::echo();
        let req = ScoreRequest {
            request_id: "s".into(),
            prefix: "instruction".into(),
            continuation: " the answer".into(),
        };
        let a = mock.score(&req).unwrap();
        let b = mock.score(&req).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.token_count, 4);
        assert!(a.token_logprobs.iter().all(|lp| *lp < 0.0 && *lp >= -1.0));
        assert!(a.exact_alignment);

        let mut other = req.clone();
        other.prefix = "different instruction".into();
        assert_ne!(mock.score(&other).unwrap().token_logprobs, a.token_logprobs);
        assert_eq!(mock.score_calls(), 3);

        let empty = ScoreRequest { request_id: "s".into(), prefix: "p".into(), continuation: "".into() };
        assert!(mock.score(&empty).is_err());
    }
}
