//! Model backends: the completion/scoring traits, an OpenAI-style HTTP
//! client with rate limiting, retries, and an on-disk response cache, and a
//! deterministic mock for tests and offline runs.

pub mod cache;
pub mod config;
pub mod http;
pub mod limiter;
pub mod mock;

use crate::error::BackendError;

pub use cache::ResponseCache;
pub use config::{load_backend_config, BackendConfigFile, BuiltBackend};
pub use http::{HttpBackend, HttpBackendBuilder};
pub use limiter::{Clock, RateLimiter, Semaphore, SystemClock, TestClock};
pub use mock::{MockBackend, MockMode};

pub type BackendResult<T> = std::result::Result<T, BackendError>;

/// A text-completion request. `request_id` exists for tracing and error
/// messages; it never goes on the wire and never affects caching.
#[derive(Clone, Debug, PartialEq)]
pub struct CompletionRequest {
    pub request_id: String,
    pub prompt: String,
    /// Number of samples to draw for this prompt.
    pub n: u32,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Generation halts at the first occurrence of any stop sequence.
    pub stop: Vec<String>,
    /// Sampling seed forwarded to the endpoint, for replayable sampling.
    pub seed: Option<u64>,
}

impl CompletionRequest {
    pub(crate) fn validate(&self) -> BackendResult<()> {
        if self.prompt.is_empty() {
            return Err(BackendError::invalid(&self.request_id, "prompt is empty"));
        }
        if self.n == 0 {
            return Err(BackendError::invalid(&self.request_id, "n must be at least 1"));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::invalid(&self.request_id, "max_tokens must be at least 1"));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(BackendError::invalid(
                &self.request_id,
                format!("temperature {} must be finite and non-negative", self.temperature),
            ));
        }
        Ok(())
    }
}

/// A scoring request: log-probabilities of `continuation` conditioned on
/// `prefix`, computed by echoing the concatenation through the model.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRequest {
    pub request_id: String,
    pub prefix: String,
    pub continuation: String,
}

impl ScoreRequest {
    pub(crate) fn validate(&self) -> BackendResult<()> {
        if self.continuation.is_empty() {
            return Err(BackendError::invalid(&self.request_id, "continuation is empty"));
        }
        Ok(())
    }
}

/// Token log-probabilities for the continuation slice of a score request.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreResponse {
    pub token_logprobs: Vec<f64>,
    pub token_count: usize,
    /// False when the endpoint's tokenization slices the prefix/continuation
    /// boundary through a token, so the scored span only approximates the
    /// continuation text.
    pub exact_alignment: bool,
}

pub trait CompletionBackend: Send + Sync {
    /// Generate `req.n` texts, in the sample order the endpoint produced.
    fn complete(&self, req: &CompletionRequest) -> BackendResult<Vec<String>>;
}

pub trait ScoreBackend: Send + Sync {
    fn score(&self, req: &ScoreRequest) -> BackendResult<ScoreResponse>;
}

impl<T: CompletionBackend + ?Sized> CompletionBackend for std::sync::Arc<T> {
    fn complete(&self, req: &CompletionRequest) -> BackendResult<Vec<String>> {
        (**self).complete(req)
    }
}

impl<T: ScoreBackend + ?Sized> ScoreBackend for std::sync::Arc<T> {
    fn score(&self, req: &ScoreRequest) -> BackendResult<ScoreResponse> {
        (**self).score(req)
    }
}

/// Truncate a generation at the first occurrence of any stop sequence.
/// Endpoints usually stop server-side; this keeps the contract even when
/// they echo the stop text.
pub(crate) fn truncate_at_stop(text: &str, stop: &[String]) -> String {
    let mut end = text.len();
    for sequence in stop {
        if sequence.is_empty() {
            continue;
        }
        if let Some(pos) = text.find(sequence.as_str()) {
            end = end.min(pos);
        }
    }
    text[..end].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request() -> CompletionRequest {
        CompletionRequest {
            request_id: "r1".into(),
            prompt: "say hi".into(),
            n: 1,
            max_tokens: 16,
            temperature: 1.0,
            stop: vec![],
            seed: None,
        }
    }

    #[test]
    fn completion_request_validation() {
        assert!(request().validate().is_ok());
        let mut bad = request();
        bad.prompt.clear();
        assert!(bad.validate().is_err());
        let mut bad = request();
        bad.n = 0;
        assert!(bad.validate().is_err());
        let mut bad = request();
        bad.temperature = -0.5;
        assert!(bad.validate().is_err());
        let mut bad = request();
        bad.temperature = f64::NAN;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stop_truncation_takes_earliest_match() {
        let stop = vec!["\nExample ".to_string(), "END".to_string()];
        assert_eq!(truncate_at_stop("abcENDdef\nExample 2", &stop), "abc");
        assert_eq!(truncate_at_stop("clean text", &stop), "clean text");
        assert_eq!(truncate_at_stop("x\nExample 2.\nmore", &stop), "x");
    }
}
