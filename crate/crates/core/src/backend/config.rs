//! Backend profiles loaded from a TOML file.
//!
//! ```toml
//! [profiles.mock]
//! kind = "mock"
//! mode = "echo"
//!
//! [profiles.prod]
//! kind = "http"
//! endpoint = "https://api.example.com/v1/completions"
//! model = "davinci-xl"
//! api_key_env = "INSTRUX_API_KEY"
//! supports_logprobs = true
//! ```
//!
//! Profiles are validated eagerly so a malformed file or a missing API key
//! fails at startup, not mid-run.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use crate::error::{BackendError, Error, Result};

use super::http::HttpBackend;
use super::mock::{MockBackend, MockMode};
use super::{CompletionBackend, ScoreBackend};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfigFile {
    pub profiles: BTreeMap<String, ProfileConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Http(HttpProfile),
    Mock(MockProfile),
}

fn default_rps() -> usize {
    4
}

fn default_in_flight() -> usize {
    4
}

fn default_attempts() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    250
}

fn default_timeout_ms() -> u64 {
    30_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpProfile {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token. Omit for
    /// unauthenticated (local) endpoints.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_rps")]
    pub requests_per_second: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Whether the endpoint implements echo+logprobs scoring.
    #[serde(default)]
    pub supports_logprobs: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockProfile {
    /// `echo`, `fixed`, or `template`.
    pub mode: String,
    /// Text for `fixed`, template for `template`.
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub logprob_scale: Option<f64>,
}

/// A constructed backend pair: completions always, scoring only when the
/// profile supports it.
pub struct BuiltBackend {
    pub completer: Arc<dyn CompletionBackend>,
    pub scorer: Option<Arc<dyn ScoreBackend>>,
}

impl std::fmt::Debug for BuiltBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BuiltBackend").field("has_scorer", &self.scorer.is_some()).finish()
    }
}

pub fn load_backend_config(path: &Path) -> Result<BackendConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: BackendConfigFile = toml::from_str(&text)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    if config.profiles.is_empty() {
        return Err(Error::config(format!("{}: no profiles defined", path.display())));
    }
    for (name, profile) in &config.profiles {
        profile.validate(name)?;
    }
    Ok(config)
}

impl ProfileConfig {
    fn validate(&self, name: &str) -> Result<()> {
        match self {
            ProfileConfig::Http(http) => {
                if !http.endpoint.starts_with("http://") && !http.endpoint.starts_with("https://") {
                    return Err(Error::config(format!(
                        "profile {name}: endpoint {:?} is not an http(s) URL",
                        http.endpoint
                    )));
                }
                if http.model.trim().is_empty() {
                    return Err(Error::config(format!("profile {name}: model is empty")));
                }
            }
            ProfileConfig::Mock(mock) => {
                match mock.mode.as_str() {
                    "echo" => {}
                    "fixed" | "template" => {
                        if mock.text.as_deref().unwrap_or("").is_empty() {
                            return Err(Error::config(format!(
                                "profile {name}: mode {:?} requires non-empty text",
                                mock.mode
                            )));
                        }
                    }
                    other => {
                        return Err(Error::config(format!(
                            "profile {name}: unknown mock mode {other:?} (expected echo, fixed, template)"
                        )))
                    }
                }
                if let Some(scale) = mock.logprob_scale {
                    if !scale.is_finite() || scale <= 0.0 {
                        return Err(Error::config(format!(
                            "profile {name}: logprob_scale must be positive and finite"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl BackendConfigFile {
    /// Construct the backend for `name`. `cache_dir` enables the on-disk
    /// response cache for HTTP profiles (the mock needs none).
    pub fn build(&self, name: &str, cache_dir: Option<&Path>) -> Result<BuiltBackend> {
        let profile = self.profiles.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.profiles.keys().map(String::as_str).collect();
            Error::config(format!(
                "unknown backend profile {name:?}; configured profiles: {}",
                known.join(", ")
            ))
        })?;
        match profile {
            ProfileConfig::Mock(mock) => {
                let mode = match mock.mode.as_str() {
                    "echo" => MockMode::EchoSource,
                    "fixed" => MockMode::Fixed(mock.text.clone().expect("validated")),
                    "template" => MockMode::Template(mock.text.clone().expect("validated")),
                    _ => unreachable!("validated at load"),
                };
                let backend = Arc::new(
                    MockBackend::new(mode).with_logprob_scale(mock.logprob_scale.unwrap_or(1.0)),
                );
                Ok(BuiltBackend {
                    completer: Arc::clone(&backend) as Arc<dyn CompletionBackend>,
                    scorer: Some(backend),
                })
            }
            ProfileConfig::Http(http) => {
                let mut builder = HttpBackend::builder(&http.endpoint, &http.model)
                    .requests_per_second(http.requests_per_second)
                    .max_in_flight(http.max_in_flight)
                    .max_attempts(http.max_attempts)
                    .backoff(Duration::from_millis(http.backoff_ms))
                    .timeout(Duration::from_millis(http.timeout_ms))
                    .supports_logprobs(http.supports_logprobs);
                if let Some(var) = &http.api_key_env {
                    let key = std::env::var(var).map_err(|_| {
                        Error::config(format!(
                            "profile {name}: api_key_env names {var:?} but it is not set"
                        ))
                    })?;
                    builder = builder.api_key(key);
                }
                if let Some(dir) = cache_dir {
                    builder = builder.cache_dir(dir);
                }
                let backend = Arc::new(builder.build()?);
                let scorer = if http.supports_logprobs {
                    Some(Arc::clone(&backend) as Arc<dyn ScoreBackend>)
                } else {
                    None
                };
                Ok(BuiltBackend {
                    completer: backend,
                    scorer,
                })
            }
        }
    }

    /// Build a scorer or fail with the capability error scoring would hit.
    pub fn build_scorer(&self, name: &str, cache_dir: Option<&Path>) -> Result<Arc<dyn ScoreBackend>> {
        let built = self.build(name, cache_dir)?;
        built.scorer.ok_or_else(|| {
            Error::Backend(BackendError::Capability(format!(
                "profile {name} does not support logprob scoring; set supports_logprobs = true on an endpoint that implements echo+logprobs"
            )))
        })
    }
}
