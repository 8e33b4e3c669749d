//! Blocking HTTP client for OpenAI-style completion endpoints.
//!
//! One client serves both traits: `complete` posts a sampling request;
//! `score` posts the prefix+continuation with `echo` and `logprobs` set and
//! slices the continuation's token logprobs out of the reply by text
//! offset. All requests flow through a bounded in-flight semaphore, a
//! sliding-window rate limiter, an exponential-backoff retry loop, and an
//! optional content-addressed response cache; a cache hit skips all of it.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::BackendError;

use super::cache::ResponseCache;
use super::limiter::{Clock, RateLimiter, Semaphore, SystemClock};
use super::{
    truncate_at_stop, BackendResult, CompletionBackend, CompletionRequest, ScoreBackend,
    ScoreRequest, ScoreResponse,
};

pub struct HttpBackendBuilder {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    max_attempts: u32,
    backoff: Duration,
    requests_per_second: usize,
    max_in_flight: usize,
    timeout: Duration,
    supports_logprobs: bool,
    cache_dir: Option<std::path::PathBuf>,
    clock: Option<Arc<dyn Clock>>,
}

impl HttpBackendBuilder {
    pub fn api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    /// Total attempts per request, including the first (so `3` means up to
    /// two retries).
    pub fn max_attempts(mut self, attempts: u32) -> Self {
        self.max_attempts = attempts.max(1);
        self
    }

    pub fn backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    pub fn requests_per_second(mut self, rps: usize) -> Self {
        self.requests_per_second = rps.max(1);
        self
    }

    pub fn max_in_flight(mut self, permits: usize) -> Self {
        self.max_in_flight = permits.max(1);
        self
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn supports_logprobs(mut self, yes: bool) -> Self {
        self.supports_logprobs = yes;
        self
    }

    pub fn cache_dir(mut self, dir: impl AsRef<Path>) -> Self {
        self.cache_dir = Some(dir.as_ref().to_path_buf());
        self
    }

    /// Override the clock used for backoff and rate limiting (tests).
    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn build(self) -> BackendResult<HttpBackend> {
        let clock = self.clock.unwrap_or_else(|| Arc::new(SystemClock::new()));
        let cache = match &self.cache_dir {
            Some(dir) => Some(ResponseCache::open(dir)?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .no_proxy()
            .build()
            .map_err(|e| BackendError::Transport {
                request_id: "<client construction>".into(),
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(HttpBackend {
            endpoint: self.endpoint,
            model: self.model,
            api_key: self.api_key,
            client,
            limiter: RateLimiter::new(
                Arc::clone(&clock),
                self.requests_per_second,
                Duration::from_secs(1),
            ),
            in_flight: Semaphore::new(self.max_in_flight),
            max_attempts: self.max_attempts,
            backoff: self.backoff,
            supports_logprobs: self.supports_logprobs,
            cache,
            clock,
            network_requests: AtomicUsize::new(0),
        })
    }
}

pub struct HttpBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
    in_flight: Semaphore,
    max_attempts: u32,
    backoff: Duration,
    supports_logprobs: bool,
    cache: Option<ResponseCache>,
    clock: Arc<dyn Clock>,
    network_requests: AtomicUsize,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    #[serde(default)]
    index: Option<u32>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    logprobs: Option<WireLogprobs>,
}

#[derive(Deserialize)]
struct WireLogprobs {
    tokens: Vec<String>,
    token_logprobs: Vec<Option<f64>>,
    text_offset: Vec<usize>,
}

impl HttpBackend {
    pub fn builder(endpoint: impl Into<String>, model: impl Into<String>) -> HttpBackendBuilder {
        HttpBackendBuilder {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            max_attempts: 3,
            backoff: Duration::from_millis(250),
            requests_per_second: 4,
            max_in_flight: 4,
            timeout: Duration::from_secs(30),
            supports_logprobs: false,
            cache_dir: None,
            clock: None,
        }
    }

    pub fn supports_logprobs(&self) -> bool {
        self.supports_logprobs
    }

    /// Requests actually sent over the network (cache hits excluded,
    /// retries included).
    pub fn network_requests(&self) -> usize {
        self.network_requests.load(Ordering::SeqCst)
    }

    /// POST `body`, with retries on transport failures, 429, and 5xx.
    /// Returns the raw response body.
    fn post_with_retries(&self, request_id: &str, body: &Value) -> BackendResult<String> {
        let _permit = self.in_flight.acquire();
        let mut last_failure = String::new();
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                // exponential backoff: base * 2^(attempt-1)
                let factor = 1u32 << (attempt - 1).min(16);
                self.clock.sleep(self.backoff.saturating_mul(factor));
            }
            self.limiter.acquire();
            self.network_requests.fetch_add(1, Ordering::SeqCst);

            let mut request = self.client.post(&self.endpoint).json(body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    let text = response.text().map_err(|e| BackendError::Transport {
                        request_id: request_id.to_string(),
                        attempts: attempt + 1,
                        message: format!("reading response body: {e}"),
                    })?;
                    if status.is_success() {
                        return Ok(text);
                    }
                    if status.as_u16() == 429 || status.is_server_error() {
                        last_failure = format!("http {status}");
                        log::warn!("{request_id}: retryable http {status} (attempt {})", attempt + 1);
                        continue;
                    }
                    return Err(BackendError::protocol(
                        request_id,
                        format!("http {status}"),
                        &text,
                    ));
                }
                Err(e) => {
                    last_failure = e.to_string();
                    log::warn!("{request_id}: transport error (attempt {}): {e}", attempt + 1);
                }
            }
        }
        Err(BackendError::Transport {
            request_id: request_id.to_string(),
            attempts: self.max_attempts,
            message: last_failure,
        })
    }

    /// Cache lookup, else network with retries; successful bodies are
    /// stored before being returned.
    fn fetch(&self, request_id: &str, kind: &str, body: &Value) -> BackendResult<String> {
        let key = ResponseCache::key(&self.endpoint, body);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&key)? {
                return Ok(hit);
            }
        }
        let raw = self.post_with_retries(request_id, body)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, kind, request_id, &raw)?;
        }
        Ok(raw)
    }

    fn parse_choices(&self, request_id: &str, raw: &str) -> BackendResult<Vec<WireChoice>> {
        let response: WireResponse = serde_json::from_str(raw)
            .map_err(|e| BackendError::protocol(request_id, format!("unparseable response: {e}"), raw))?;
        Ok(response.choices)
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, req: &CompletionRequest) -> BackendResult<Vec<String>> {
        req.validate()?;
        let mut body = json!({
            "model": self.model,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "n": req.n,
            "temperature": req.temperature,
        });
        if !req.stop.is_empty() {
            body["stop"] = json!(req.stop);
        }
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }

        let raw = self.fetch(&req.request_id, "completion", &body)?;
        let mut choices = self.parse_choices(&req.request_id, &raw)?;
        if choices.len() != req.n as usize {
            return Err(BackendError::protocol(
                &req.request_id,
                format!("expected {} choices, endpoint returned {}", req.n, choices.len()),
                &raw,
            ));
        }
        // restore sample order; endpoints may interleave under n > 1
        if choices.iter().all(|c| c.index.is_some()) {
            choices.sort_by_key(|c| c.index.expect("checked above"));
        }
        choices
            .into_iter()
            .map(|choice| {
                let text = choice.text.ok_or_else(|| {
                    BackendError::protocol(&req.request_id, "choice without text", &raw)
                })?;
                Ok(truncate_at_stop(&text, &req.stop))
            })
            .collect()
    }
}

impl ScoreBackend for HttpBackend {
    fn score(&self, req: &ScoreRequest) -> BackendResult<ScoreResponse> {
        req.validate()?;
        if !self.supports_logprobs {
            return Err(BackendError::Capability(format!(
                "endpoint {} is not configured for logprob scoring (request {})",
                self.endpoint, req.request_id
            )));
        }
        let full_text = format!("{}{}", req.prefix, req.continuation);
        let body = json!({
            "model": self.model,
            "prompt": full_text,
            "max_tokens": 0,
            "n": 1,
            "temperature": 0.0,
            "echo": true,
            "logprobs": 0,
        });

        let raw = self.fetch(&req.request_id, "score", &body)?;
        let choices = self.parse_choices(&req.request_id, &raw)?;
        let choice = choices.into_iter().next().ok_or_else(|| {
            BackendError::protocol(&req.request_id, "empty choices in score response", &raw)
        })?;
        let logprobs = choice.logprobs.ok_or_else(|| {
            BackendError::protocol(&req.request_id, "score response missing logprobs", &raw)
        })?;
        if logprobs.tokens.len() != logprobs.token_logprobs.len()
            || logprobs.tokens.len() != logprobs.text_offset.len()
        {
            return Err(BackendError::protocol(
                &req.request_id,
                "logprob arrays have mismatched lengths",
                &raw,
            ));
        }

        let boundary = req.prefix.len();
        let start = logprobs
            .text_offset
            .iter()
            .position(|offset| *offset >= boundary)
            .ok_or_else(|| {
                BackendError::protocol(
                    &req.request_id,
                    format!("tokens do not cover the continuation slice {:?}", req.continuation),
                    &raw,
                )
            })?;

        let mut token_logprobs = Vec::with_capacity(logprobs.tokens.len() - start);
        for (i, logprob) in logprobs.token_logprobs[start..].iter().enumerate() {
            match logprob {
                Some(lp) if lp.is_finite() => token_logprobs.push(*lp),
                Some(_) => {
                    return Err(BackendError::protocol(
                        &req.request_id,
                        format!("non-finite logprob at continuation token {i}"),
                        &raw,
                    ))
                }
                None => {
                    return Err(BackendError::protocol(
                        &req.request_id,
                        format!("null logprob at continuation token {i}"),
                        &raw,
                    ))
                }
            }
        }
        if token_logprobs.is_empty() {
            return Err(BackendError::protocol(
                &req.request_id,
                format!("tokens do not cover the continuation slice {:?}", req.continuation),
                &raw,
            ));
        }

        let reconstructed: String = logprobs.tokens[start..].concat();
        let exact_alignment =
            logprobs.text_offset[start] == boundary && reconstructed == req.continuation;
        Ok(ScoreResponse {
            token_count: token_logprobs.len(),
            token_logprobs,
            exact_alignment,
        })
    }
}
