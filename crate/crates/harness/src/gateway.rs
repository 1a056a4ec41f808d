//! Chat-completion gateways: a live HTTP client with retries, and an offline
//! replay store keyed by request hash.

use std::collections::{HashMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::{debug, warn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 0.5,
            top_p: 0.5,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub sampling: SamplingParams,
    /// Run seed, forwarded to endpoints that accept one and part of the replay key.
    pub seed: Option<u64>,
}

impl ChatRequest {
    /// Stable hash of the whole request.
    pub fn key(&self) -> String {
        let json = serde_json::to_string(self).expect("request serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default)]
    pub usage: Option<TokenUsage>,
    /// Attempts spent, including the successful one.
    #[serde(default = "one")]
    pub attempts: u32,
}

fn one() -> u32 {
    1
}

impl ChatResponse {
    pub fn text(text: impl Into<String>) -> Self {
        ChatResponse {
            text: text.into(),
            usage: None,
            attempts: 1,
        }
    }
}

/// Gateway traffic of one simulation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageTally {
    pub requests: u32,
    pub attempts: u32,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl UsageTally {
    pub fn record(&mut self, response: &ChatResponse) {
        self.requests += 1;
        self.attempts += response.attempts;
        if let Some(u) = response.usage {
            self.prompt_tokens += u.prompt_tokens;
            self.completion_tokens += u.completion_tokens;
        }
    }

    pub fn record_failure(&mut self, error: &GatewayError) {
        self.requests += 1;
        self.attempts += error.attempts();
    }

    pub fn merge(&mut self, other: UsageTally) {
        self.requests += other.requests;
        self.attempts += other.attempts;
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum GatewayError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("endpoint returned status {status} after {attempts} attempt(s): {body}")]
    Status { status: u16, body: String, attempts: u32 },
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("no recorded response for request {key}")]
    ReplayMiss { key: String },
    #[error("missing credentials: environment variable {0} is not set")]
    Credentials(String),
    #[error("gateway store: {0}")]
    Store(String),
}

impl GatewayError {
    pub fn attempts(&self) -> u32 {
        match self {
            GatewayError::Transport { attempts, .. }
            | GatewayError::RateLimited { attempts }
            | GatewayError::Status { attempts, .. } => *attempts,
            _ => 1,
        }
    }
}

/// Text in, text out. Implementations must be safe to share across simulations.
pub trait ChatGateway: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry.saturating_sub(1));
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}

fn default_timeout() -> u64 {
    120
}

/// OpenAI-compatible chat-completion endpoint over blocking HTTP.
pub struct HttpGateway {
    client: reqwest::blocking::Client,
    url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

enum Failure {
    Retryable(GatewayError, Option<Duration>),
    Fatal(GatewayError),
}

impl HttpGateway {
    /// Reads the API key from the configured environment variable.
    pub fn from_config(config: &EndpointConfig) -> Result<Self, GatewayError> {
        let key =
            std::env::var(&config.api_key_env).map_err(|_| GatewayError::Credentials(config.api_key_env.clone()))?;
        Self::new(&config.url, Some(key), Duration::from_secs(config.timeout_secs))
    }

    pub fn new(url: &str, api_key: Option<String>, timeout: Duration) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Transport {
                message: e.to_string(),
                attempts: 0,
            })?;
        Ok(HttpGateway {
            client,
            url: url.to_string(),
            api_key,
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn body(request: &ChatRequest) -> serde_json::Value {
        let mut body = serde_json::json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.sampling.temperature,
            "top_p": request.sampling.top_p,
            "frequency_penalty": request.sampling.frequency_penalty,
            "presence_penalty": request.sampling.presence_penalty,
        });
        if let Some(seed) = request.seed {
            body["seed"] = serde_json::json!(seed);
        }
        body
    }

    fn attempt(&self, body: &serde_json::Value, attempts: u32) -> Result<ChatResponse, Failure> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            Failure::Retryable(
                GatewayError::Transport {
                    message: e.to_string(),
                    attempts,
                },
                None,
            )
        })?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(Failure::Retryable(GatewayError::RateLimited { attempts }, after));
        }
        let text = resp.text().map_err(|e| {
            Failure::Retryable(
                GatewayError::Transport {
                    message: e.to_string(),
                    attempts,
                },
                None,
            )
        })?;
        if !status.is_success() {
            let err = GatewayError::Status {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
                attempts,
            };
            return Err(if status.is_server_error() {
                Failure::Retryable(err, None)
            } else {
                Failure::Fatal(err)
            });
        }
        parse_completion(&text, attempts).map_err(Failure::Fatal)
    }
}

fn parse_completion(body: &str, attempts: u32) -> Result<ChatResponse, GatewayError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| GatewayError::Protocol(e.to_string()))?;
    let text = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| GatewayError::Protocol("no choices[0].message.content".into()))?;
    let usage = v.get("usage").map(|u| TokenUsage {
        prompt_tokens: u["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: u["completion_tokens"].as_u64().unwrap_or(0),
    });
    Ok(ChatResponse {
        text: text.to_string(),
        usage,
        attempts,
    })
}

impl ChatGateway for HttpGateway {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let body = Self::body(request);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, attempts) {
                Ok(resp) => return Ok(resp),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(e, after)) => {
                    if attempts > self.retry.max_retries {
                        warn!(attempts, error = %e, "giving up on chat completion");
                        return Err(e);
                    }
                    let delay = after
                        .unwrap_or_else(|| self.retry.delay(attempts))
                        .min(self.retry.max_delay);
                    debug!(attempts, ?delay, error = %e, "retrying chat completion");
                    std::thread::sleep(delay);
                }
            }
        }
    }
}

/// One recorded exchange in a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub key: String,
    pub request: ChatRequest,
    pub response: ChatResponse,
}

impl ReplayEntry {
    pub fn new(request: ChatRequest, response: ChatResponse) -> Self {
        ReplayEntry {
            key: request.key(),
            request,
            response,
        }
    }
}

/// Serves recorded responses by request hash. Repeated identical requests
/// receive their recordings in file order.
pub struct ReplayGateway {
    entries: Mutex<HashMap<String, VecDeque<ChatResponse>>>,
}

impl ReplayGateway {
    pub fn from_entries(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        let mut map: HashMap<String, VecDeque<ChatResponse>> = HashMap::new();
        for e in entries {
            map.entry(e.key).or_default().push_back(e.response);
        }
        ReplayGateway {
            entries: Mutex::new(map),
        }
    }

    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let file = File::open(path).map_err(|e| GatewayError::Store(format!("{}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| GatewayError::Store(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ReplayEntry = serde_json::from_str(&line)
                .map_err(|e| GatewayError::Store(format!("{}:{}: {e}", path.display(), i + 1)))?;
            entries.push(entry);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn remaining(&self) -> usize {
        self.entries
            .lock()
            .expect("replay lock")
            .values()
            .map(VecDeque::len)
            .sum()
    }
}

impl ChatGateway for ReplayGateway {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let key = request.key();
        let mut entries = self.entries.lock().expect("replay lock");
        entries
            .get_mut(&key)
            .and_then(VecDeque::pop_front)
            .ok_or(GatewayError::ReplayMiss { key })
    }
}

/// Forwards to an inner gateway and appends every successful exchange to a
/// replay file.
pub struct RecordingGateway<G> {
    inner: G,
    out: Mutex<BufWriter<File>>,
}

impl<G: ChatGateway> RecordingGateway<G> {
    pub fn create(inner: G, path: &Path) -> Result<Self, GatewayError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| GatewayError::Store(format!("{}: {e}", path.display())))?;
        Ok(RecordingGateway {
            inner,
            out: Mutex::new(BufWriter::new(file)),
        })
    }
}

impl<G: ChatGateway> ChatGateway for RecordingGateway<G> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let response = self.inner.complete(request)?;
        let entry = ReplayEntry::new(request.clone(), response.clone());
        let line = serde_json::to_string(&entry).map_err(|e| GatewayError::Store(e.to_string()))?;
        let mut out = self.out.lock().expect("recording lock");
        writeln!(out, "{line}")
            .and_then(|_| out.flush())
            .map_err(|e| GatewayError::Store(e.to_string()))?;
        Ok(response)
    }
}

impl<G: ChatGateway + ?Sized> ChatGateway for std::sync::Arc<G> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(text: &str) -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            messages: vec![ChatMessage::user(text)],
            sampling: SamplingParams::default(),
            seed: Some(3),
        }
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(1), Duration::from_millis(500));
        assert_eq!(p.delay(2), Duration::from_millis(1000));
        assert_eq!(p.delay(3), Duration::from_millis(2000));
        assert_eq!(p.delay(10), Duration::from_secs(8));
    }

    #[test]
    fn keys_depend_on_every_field() {
        let a = request("hi");
        let mut b = a.clone();
        b.seed = Some(4);
        assert_ne!(a.key(), b.key());
        assert_eq!(a.key(), request("hi").key());
    }

    #[test]
    fn replay_serves_in_order_then_misses() {
        let gw = ReplayGateway::from_entries([
            ReplayEntry::new(request("hi"), ChatResponse::text("one")),
            ReplayEntry::new(request("hi"), ChatResponse::text("two")),
        ]);
        assert_eq!(gw.complete(&request("hi")).unwrap().text, "one");
        assert_eq!(gw.complete(&request("hi")).unwrap().text, "two");
        assert!(matches!(
            gw.complete(&request("hi")),
            Err(GatewayError::ReplayMiss { .. })
        ));
    }

    #[test]
    fn recording_round_trips_through_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.jsonl");
        let inner = ReplayGateway::from_entries([ReplayEntry::new(request("q"), ChatResponse::text("a"))]);
        let rec = RecordingGateway::create(inner, &path).unwrap();
        rec.complete(&request("q")).unwrap();
        drop(rec);
        let replay = ReplayGateway::open(&path).unwrap();
        assert_eq!(replay.complete(&request("q")).unwrap().text, "a");
    }

    #[test]
    fn completion_body_parsing() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"OFFER: $0.50"}}],"usage":{"prompt_tokens":7,"completion_tokens":3}}"#;
        let r = parse_completion(body, 2).unwrap();
        assert_eq!(r.text, "OFFER: $0.50");
        assert_eq!(r.usage.unwrap().completion_tokens, 3);
        assert_eq!(r.attempts, 2);
        assert!(parse_completion("{}", 1).is_err());
    }
}
