//! Chat-completion client with record/replay response caching.
//!
//! The whole prompt is sent as one user message. Responses are cached by a
//! content fingerprint of the request, so an edited prompt never reuses a
//! stale completion. The API key is read from a named environment variable at
//! request time. It is never stored in the config, logged, or included in
//! errors.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::PromptBundle;
use crate::seed::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model_name: String,
    pub endpoint_url: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    /// Delay before the first retry; doubles on each further retry.
    #[serde(default = "default_backoff_ms")]
    pub initial_backoff_ms: u64,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_secs: u64,
}

fn default_max_attempts() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    1000
}

fn default_request_timeout() -> u64 {
    120
}

const OPENAI_URL: &str = "https://api.openai.com/v1/chat/completions";
const DEEPINFRA_URL: &str = "https://api.deepinfra.com/v1/openai/chat/completions";

impl ModelConfig {
    pub fn new(model_name: &str, endpoint_url: &str, api_key_env: &str, temperature: f64) -> Self {
        Self {
            model_name: model_name.into(),
            endpoint_url: endpoint_url.into(),
            api_key_env: api_key_env.into(),
            temperature,
            max_tokens: 1024,
            max_attempts: default_max_attempts(),
            initial_backoff_ms: default_backoff_ms(),
            request_timeout_secs: default_request_timeout(),
        }
    }

    /// Configurations for the evaluated model families: temperature 0.7,
    /// except 1.0 for Mixtral.
    pub fn preset(name: &str) -> Option<Self> {
        Some(match name {
            "gpt-3.5-turbo" | "gpt35" => Self::new("gpt-3.5-turbo", OPENAI_URL, "OPENAI_API_KEY", 0.7),
            "llama3-8b" => Self::new("meta-llama/Meta-Llama-3-8B-Instruct", DEEPINFRA_URL, "DEEPINFRA_API_KEY", 0.7),
            "llama3-70b" => Self::new("meta-llama/Meta-Llama-3-70B-Instruct", DEEPINFRA_URL, "DEEPINFRA_API_KEY", 0.7),
            "mixtral-8x7b" => Self::new("mistralai/Mixtral-8x7B-Instruct-v0.1", DEEPINFRA_URL, "DEEPINFRA_API_KEY", 1.0),
            "mixtral-8x22b" => Self::new("mistralai/Mixtral-8x22B-Instruct-v0.1", DEEPINFRA_URL, "DEEPINFRA_API_KEY", 1.0),
            _ => return None,
        })
    }

    pub const PRESETS: [&'static str; 5] = ["gpt-3.5-turbo", "llama3-8b", "llama3-70b", "mixtral-8x7b", "mixtral-8x22b"];

    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.model_name.trim().is_empty() {
            return Err("model_name must not be empty".into());
        }
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("environment variable `{0}` with the API key is not set")]
    MissingApiKey(String),
    #[error("authentication failed (HTTP {0})")]
    Auth(u16),
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider returned HTTP {status}: {excerpt}")]
    Http { status: u16, excerpt: String },
    #[error("malformed provider payload: {0}")]
    Malformed(String),
    #[error("replay cache has no response for fingerprint {0}")]
    CacheMiss(String),
    #[error("response cache: {0}")]
    Cache(String),
    #[error("response cache i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl ModelError {
    fn is_transient(&self) -> bool {
        match self {
            ModelError::RateLimited { .. } | ModelError::Timeout { .. } | ModelError::Transport { .. } => true,
            ModelError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }

    fn with_attempts(self, n: u32) -> Self {
        match self {
            ModelError::RateLimited { .. } => ModelError::RateLimited { attempts: n },
            ModelError::Timeout { .. } => ModelError::Timeout { attempts: n },
            ModelError::Transport { message, .. } => ModelError::Transport { attempts: n, message },
            other => other,
        }
    }
}

/// Content fingerprint of a request.
pub fn fingerprint(model_name: &str, prompt: &str, temperature: f64, max_tokens: u32) -> String {
    let mut buf = Vec::new();
    for part in [
        model_name.as_bytes(),
        prompt.as_bytes(),
        &temperature.to_bits().to_le_bytes(),
        &max_tokens.to_le_bytes(),
    ] {
        buf.extend((part.len() as u64).to_le_bytes());
        buf.extend(part);
    }
    sha256_hex(&buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Live,
    Cache,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelResponse {
    pub text: String,
    pub request_fingerprint: String,
    pub latency_ms: u64,
    pub origin: Origin,
}

/// Anything that can answer a prompt: the HTTP client, or a test stub.
pub trait CompletionBackend: Send + Sync {
    /// One attempt, without retries.
    fn complete_once(&self, prompt: &str, config: &ModelConfig) -> Result<String, ModelError>;
}

/// Chat-completion client over HTTP.
pub struct ChatClient {
    agent: ureq::Agent,
}

impl ChatClient {
    pub fn new(request_timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(request_timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

fn excerpt(text: &str) -> String {
    text.chars().take(300).collect()
}

fn parse_chat_response(body: &str) -> Result<String, ModelError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| ModelError::Malformed(format!("invalid JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| ModelError::Malformed(format!("no choices[0].message.content in {}", excerpt(body))))
}

impl CompletionBackend for ChatClient {
    fn complete_once(&self, prompt: &str, config: &ModelConfig) -> Result<String, ModelError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ModelError::MissingApiKey(config.api_key_env.clone()))?;
        let body = serde_json::to_vec(&ChatRequest {
            model: &config.model_name,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: config.temperature,
            max_tokens: config.max_tokens,
        })
        .map_err(|e| ModelError::Malformed(e.to_string()))?;
        let response = self
            .agent
            .post(&config.endpoint_url)
            .header("Authorization", &format!("Bearer {key}"))
            .header("Content-Type", "application/json")
            .send(&body[..]);
        let mut response = match response {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(ModelError::Timeout { attempts: 1 }),
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::TimedOut => {
                return Err(ModelError::Timeout { attempts: 1 })
            }
            Err(e) => {
                return Err(ModelError::Transport {
                    attempts: 1,
                    message: e.to_string(),
                })
            }
        };
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => ModelError::Timeout { attempts: 1 },
            other => ModelError::Transport {
                attempts: 1,
                message: other.to_string(),
            },
        })?;
        match status {
            200..=299 => parse_chat_response(&text),
            401 | 403 => Err(ModelError::Auth(status)),
            429 => Err(ModelError::RateLimited { attempts: 1 }),
            _ => Err(ModelError::Http {
                status,
                excerpt: excerpt(&text),
            }),
        }
    }
}

/// Calls the backend, retrying transient failures with exponential backoff.
pub fn complete(prompt: &str, config: &ModelConfig, backend: &dyn CompletionBackend) -> Result<ModelResponse, ModelError> {
    let started = Instant::now();
    let mut attempt = 1;
    loop {
        match backend.complete_once(prompt, config) {
            Ok(text) => {
                return Ok(ModelResponse {
                    text,
                    request_fingerprint: fingerprint(&config.model_name, prompt, config.temperature, config.max_tokens),
                    latency_ms: started.elapsed().as_millis() as u64,
                    origin: Origin::Live,
                })
            }
            Err(e) if e.is_transient() && attempt < config.max_attempts => {
                let delay = config.initial_backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                tracing::warn!(attempt, error = %e, delay_ms = delay, "retrying model request");
                std::thread::sleep(Duration::from_millis(delay));
                attempt += 1;
            }
            Err(e) => return Err(e.with_attempts(attempt)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    /// Serve from the cache when possible, otherwise call the model and store
    /// the response.
    Record,
    /// Serve only from the cache; a miss is an error.
    #[default]
    Replay,
    /// Always call the model; the cache is neither read nor written.
    Passthrough,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    fingerprint: String,
    model: String,
    text: String,
    timestamp: u64,
}

/// Append-only line-delimited response cache.
pub struct ResponseCache {
    path: PathBuf,
    entries: Mutex<HashMap<String, String>>,
    writer: Mutex<Option<File>>,
}

impl ResponseCache {
    /// Loads the cache at `path`; a missing file is an empty cache.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, ModelError> {
        let path = path.into();
        let mut entries = HashMap::new();
        match File::open(&path) {
            Ok(file) => {
                for (i, line) in BufReader::new(file).lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let entry: CacheEntry = serde_json::from_str(&line)
                        .map_err(|e| ModelError::Cache(format!("{} line {}: {e}", path.display(), i + 1)))?;
                    entries.insert(entry.fingerprint, entry.text);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        Ok(Self {
            path,
            entries: Mutex::new(entries),
            writer: Mutex::new(None),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, fingerprint: &str) -> Option<String> {
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(fingerprint)
            .cloned()
    }

    /// Appends one entry; concurrent writers are serialized.
    pub fn put(&self, fingerprint: &str, model: &str, text: &str) -> Result<(), ModelError> {
        let entry = CacheEntry {
            fingerprint: fingerprint.into(),
            model: model.into(),
            text: text.into(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut line = serde_json::to_string(&entry).map_err(|e| ModelError::Cache(e.to_string()))?;
        line.push('\n');
        let mut writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        if writer.is_none() {
            if let Some(parent) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            *writer = Some(OpenOptions::new().create(true).append(true).open(&self.path)?);
        }
        let file = writer.as_mut().expect("writer opened above");
        file.write_all(line.as_bytes())?;
        file.flush()?;
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(entry.fingerprint, entry.text);
        Ok(())
    }
}

/// Completes a prompt through the cache according to `mode`.
pub fn cached_complete(
    bundle: &PromptBundle,
    config: &ModelConfig,
    backend: &dyn CompletionBackend,
    cache: &ResponseCache,
    mode: CacheMode,
) -> Result<ModelResponse, ModelError> {
    let prompt = bundle.text();
    let fp = fingerprint(&config.model_name, &prompt, config.temperature, config.max_tokens);
    if mode != CacheMode::Passthrough {
        if let Some(text) = cache.get(&fp) {
            return Ok(ModelResponse {
                text,
                request_fingerprint: fp,
                latency_ms: 0,
                origin: Origin::Cache,
            });
        }
    }
    match mode {
        CacheMode::Replay => Err(ModelError::CacheMiss(fp)),
        CacheMode::Passthrough => complete(&prompt, config, backend),
        CacheMode::Record => {
            let response = complete(&prompt, config, backend)?;
            cache.put(&fp, &config.model_name, &response.text)?;
            Ok(response)
        }
    }
}
