//! Completion agents behind one interface: a live OpenAI-compatible HTTP
//! endpoint, a record/replay cache, an oracle that solves corpus tasks
//! exactly, and scripted faulty agents.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{render_program, CorpusFile, ProgramDistortion};
use crate::prompt::PromptBundle;
use crate::skillscript::pretty_print;

pub const DEFAULT_MAX_TOKENS: u32 = 2048;
pub const DEFAULT_API_KEY_ENV: &str = "GSCE_API_KEY";
pub const CACHE_FILE_NAME: &str = "responses.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_text: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub repeat_index: u32,
}

fn default_max_tokens() -> u32 {
    DEFAULT_MAX_TOKENS
}

impl ChatRequest {
    pub fn from_bundle(bundle: &PromptBundle, model: impl Into<String>, repeat_index: u32) -> Self {
        ChatRequest {
            system_text: bundle.system_text.clone(),
            user_text: bundle.user_text.clone(),
            model: model.into(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            repeat_index,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(LlmError::InvalidRequest(format!("temperature {} must be >= 0", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Hex SHA-256 over the canonical JSON form of the request. Object keys are
/// emitted in sorted order, so the digest does not depend on field order.
pub fn cache_key(request: &ChatRequest) -> String {
    // serde_json's default map is ordered by key
    let value = serde_json::json!({
        "max_tokens": request.max_tokens,
        "model": request.model,
        "repeat_index": request.repeat_index,
        "system_text": request.system_text,
        "temperature": request.temperature,
        "user_text": request.user_text,
    });
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

/// Recoverable completion failure; recorded as an `LLMError` run outcome.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum LlmError {
    #[error("cache miss")]
    CacheMiss,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("response truncated at max_tokens")]
    Truncated,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no corpus task matches the query")]
    UnknownTask,
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cache line {line} is not a valid record: {source}")]
    Corrupt { line: usize, source: serde_json::Error },
    #[error("hash collision on {0}: same digest, different request")]
    Collision(String),
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    /// Fatal: the batch must stop.
    #[error(transparent)]
    Cache(#[from] CacheError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub request_hash: String,
    pub response_text: String,
    pub model: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub request: ChatRequest,
}

/// Append-only JSON-lines response cache stored as `DIR/responses.jsonl`.
#[derive(Debug)]
pub struct ResponseCache {
    path: PathBuf,
    inner: Mutex<CacheInner>,
}

#[derive(Debug)]
struct CacheInner {
    records: HashMap<String, CacheRecord>,
    file: File,
}

impl ResponseCache {
    /// Opens (creating if needed) the cache in `dir`, loading existing records.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CacheError> {
        let dir = dir.as_ref();
        let io = |source| CacheError::Io { path: dir.display().to_string(), source };
        std::fs::create_dir_all(dir).map_err(io)?;
        let path = dir.join(CACHE_FILE_NAME);
        let io = |source| CacheError::Io { path: path.display().to_string(), source };
        let mut records: HashMap<String, CacheRecord> = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: CacheRecord =
                    serde_json::from_str(&line).map_err(|source| CacheError::Corrupt { line: i + 1, source })?;
                match records.get(&record.request_hash) {
                    Some(existing) if existing.request != record.request => {
                        return Err(CacheError::Collision(record.request_hash));
                    }
                    Some(_) => {}
                    None => {
                        records.insert(record.request_hash.clone(), record);
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        Ok(ResponseCache { path, inner: Mutex::new(CacheInner { records, file }) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, request: &ChatRequest) -> Result<Option<String>, CacheError> {
        let hash = cache_key(request);
        let inner = self.inner.lock().expect("cache lock");
        match inner.records.get(&hash) {
            Some(r) if &r.request != request => Err(CacheError::Collision(hash)),
            Some(r) => Ok(Some(r.response_text.clone())),
            None => Ok(None),
        }
    }

    /// Stores a response. Re-inserting an identical request keeps the first
    /// record.
    pub fn insert(&self, request: &ChatRequest, response_text: &str) -> Result<(), CacheError> {
        let hash = cache_key(request);
        let mut inner = self.inner.lock().expect("cache lock");
        if let Some(existing) = inner.records.get(&hash) {
            return if &existing.request == request { Ok(()) } else { Err(CacheError::Collision(hash)) };
        }
        let record = CacheRecord {
            request_hash: hash.clone(),
            response_text: response_text.to_string(),
            model: request.model.clone(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            request: request.clone(),
        };
        let mut line = serde_json::to_string(&record).expect("record serializes");
        line.push('\n');
        let io = |source| CacheError::Io { path: self.path.display().to_string(), source };
        inner.file.write_all(line.as_bytes()).map_err(io)?;
        inner.file.flush().map_err(io)?;
        inner.records.insert(hash, record);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// HTTP

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub base_url: String,
    /// Name of the environment variable holding the bearer key.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    pub max_concurrency: usize,
    /// Minimum spacing between request starts; 0 disables rate limiting.
    pub min_interval_ms: u64,
    pub jitter_seed: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://localhost:8000/v1".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 120.0,
            max_attempts: 3,
            backoff_base_ms: 500,
            backoff_max_ms: 8000,
            max_concurrency: 4,
            min_interval_ms: 0,
            jitter_seed: 0,
        }
    }
}

/// Counting semaphore.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct HttpAgent {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
    next_start: Mutex<Option<Instant>>,
    jitter: Mutex<ChaCha8Rng>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Retry(LlmError),
    Fail(LlmError),
}

impl HttpAgent {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpAgent {
            gate: Gate::new(config.max_concurrency),
            next_start: Mutex::new(None),
            jitter: Mutex::new(ChaCha8Rng::seed_from_u64(config.jitter_seed)),
            client,
            config,
        })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn wait_for_slot(&self) {
        if self.config.min_interval_ms == 0 {
            return;
        }
        let interval = Duration::from_millis(self.config.min_interval_ms);
        let start = {
            let mut next = self.next_start.lock().expect("rate lock");
            let now = Instant::now();
            let start = next.map_or(now, |t| t.max(now));
            *next = Some(start + interval);
            start
        };
        let now = Instant::now();
        if start > now {
            std::thread::sleep(start - now);
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.config.backoff_base_ms;
        let exp = base.saturating_mul(1u64 << attempt.min(20)).min(self.config.backoff_max_ms);
        let jitter = if base == 0 { 0 } else { self.jitter.lock().expect("jitter lock").random_range(0..base) };
        Duration::from_millis(exp + jitter)
    }

    fn attempt(&self, request: &ChatRequest) -> Result<String, Attempt> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": request.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
        });
        let mut builder = self.client.post(&url).json(&body);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            if !key.is_empty() {
                builder = builder.bearer_auth(key);
            }
        }
        let response = builder.send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(LlmError::Timeout)
            } else {
                Attempt::Retry(LlmError::Transport(e.to_string()))
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            let code = status.as_u16();
            let body: String = response.text().unwrap_or_default().chars().take(500).collect();
            let err = LlmError::Status { status: code, body };
            return Err(if code == 429 || status.is_server_error() { Attempt::Retry(err) } else { Attempt::Fail(err) });
        }
        let text = response.text().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(LlmError::Timeout)
            } else {
                Attempt::Retry(LlmError::Transport(e.to_string()))
            }
        })?;
        let wire: WireResponse =
            serde_json::from_str(&text).map_err(|e| Attempt::Fail(LlmError::Malformed(e.to_string())))?;
        let choice =
            wire.choices.into_iter().next().ok_or_else(|| Attempt::Fail(LlmError::Malformed("no choices".into())))?;
        if choice.finish_reason.as_deref() == Some("length") {
            return Err(Attempt::Fail(LlmError::Truncated));
        }
        choice.message.content.ok_or_else(|| Attempt::Fail(LlmError::Malformed("choice has no message content".into())))
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.validate()?;
        let _permit = self.gate.acquire();
        let attempts = self.config.max_attempts.max(1);
        let mut last = LlmError::Transport("no attempt made".into());
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1));
            }
            self.wait_for_slot();
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    log::warn!("attempt {} of {} failed: {e}", attempt + 1, attempts);
                    last = e;
                }
            }
        }
        Err(last)
    }
}

// ---------------------------------------------------------------------------
// Scripted agents

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    FlipZSign,
    IgnoreBodyFrame,
    EmitProse,
}

impl Fault {
    pub const ALL: [Fault; 3] = [Fault::FlipZSign, Fault::IgnoreBodyFrame, Fault::EmitProse];

    pub fn name(self) -> &'static str {
        match self {
            Fault::FlipZSign => "flip_z_sign",
            Fault::IgnoreBodyFrame => "ignore_body_frame",
            Fault::EmitProse => "emit_prose",
        }
    }
}

impl FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Fault::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown fault `{s}` (expected flip_z_sign, ignore_body_frame or emit_prose)"))
    }
}

fn fenced(program: &str) -> String {
    format!("Here is the program for the task.\n\n```skillscript\n{program}\n```\n")
}

fn scripted_response(
    corpus: &CorpusFile,
    request: &ChatRequest,
    distortion: ProgramDistortion,
) -> Result<String, LlmError> {
    let maneuvers =
        corpus.task_by_query(&request.user_text).and_then(|t| t.maneuvers.as_ref()).ok_or(LlmError::UnknownTask)?;
    Ok(fenced(&pretty_print(&render_program(maneuvers, distortion))))
}

#[derive(Debug)]
pub enum Agent {
    Http(Box<HttpAgent>),
    /// Serves cached responses. On a miss, a strict replay fails; otherwise
    /// the upstream agent is asked and its answer recorded.
    Replay {
        cache: Arc<ResponseCache>,
        strict: bool,
        upstream: Option<Box<Agent>>,
    },
    Oracle {
        corpus: Arc<CorpusFile>,
    },
    Faulty {
        corpus: Arc<CorpusFile>,
        fault: Fault,
    },
}

impl Agent {
    pub fn kind_name(&self) -> String {
        match self {
            Agent::Http(_) => "http".into(),
            Agent::Replay { .. } => "replay".into(),
            Agent::Oracle { .. } => "oracle".into(),
            Agent::Faulty { fault, .. } => format!("faulty:{}", fault.name()),
        }
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<String, AgentError> {
        match self {
            Agent::Http(http) => Ok(http.complete(request)?),
            Agent::Replay { cache, strict, upstream } => {
                if let Some(text) = cache.get(request)? {
                    return Ok(text);
                }
                match upstream {
                    Some(up) if !strict => {
                        let text = up.complete(request)?;
                        cache.insert(request, &text)?;
                        Ok(text)
                    }
                    _ => Err(LlmError::CacheMiss.into()),
                }
            }
            Agent::Oracle { corpus } => Ok(scripted_response(corpus, request, ProgramDistortion::default())?),
            Agent::Faulty { corpus, fault } => {
                let text = match fault {
                    Fault::FlipZSign => {
                        scripted_response(corpus, request, ProgramDistortion { flip_z: true, body_as_world: false })?
                    }
                    Fault::IgnoreBodyFrame => {
                        scripted_response(corpus, request, ProgramDistortion { flip_z: false, body_as_world: true })?
                    }
                    Fault::EmitProse => format!(
                        "Sure. To complete this task the drone should take off and then carry out the request: {}",
                        request.user_text
                    ),
                };
                Ok(text)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{execute_program, sample_tasks, CORPUS_VERSION};
    use crate::dronesim::StateTransition;
    use std::io::Read;
    use std::net::{TcpListener, TcpStream};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn request(user: &str, repeat: u32) -> ChatRequest {
        ChatRequest {
            system_text: "sys".into(),
            user_text: user.into(),
            model: "m".into(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            repeat_index: repeat,
        }
    }

    fn samples() -> Arc<CorpusFile> {
        Arc::new(CorpusFile { version: CORPUS_VERSION, tasks: sample_tasks() })
    }

    fn code_of(response: &str) -> String {
        let start = response.find("```skillscript\n").unwrap() + "```skillscript\n".len();
        let end = response[start..].find("```").unwrap() + start;
        response[start..end].to_string()
    }

    #[test]
    fn cache_key_rules() {
        let a = request("q", 0);
        assert_eq!(cache_key(&a), cache_key(&a.clone()));
        assert_ne!(cache_key(&a), cache_key(&request("q", 1)));
        assert_eq!(cache_key(&a).len(), 64);
        let one: ChatRequest = serde_json::from_str(
            r#"{"system_text":"s","user_text":"u","model":"m","temperature":0.0,"max_tokens":10,"repeat_index":2}"#,
        )
        .unwrap();
        let two: ChatRequest = serde_json::from_str(
            r#"{"repeat_index":2,"max_tokens":10,"temperature":0.0,"model":"m","user_text":"u","system_text":"s"}"#,
        )
        .unwrap();
        assert_eq!(cache_key(&one), cache_key(&two));
    }

    #[test]
    fn request_validation() {
        let mut r = request("q", 0);
        r.temperature = -0.5;
        assert!(r.validate().is_err());
        r.temperature = 0.0;
        r.max_tokens = 0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn oracle_solves_sample_one() {
        let agent = Agent::Oracle { corpus: samples() };
        let task = &sample_tasks()[0];
        let text = agent.complete(&request(&task.query, 0)).unwrap();
        let log = execute_program(&code_of(&text)).unwrap();
        assert_eq!(log, vec![StateTransition::movement(0.0, 0.0, 5.0), StateTransition::movement(0.0, 0.0, -4.0)]);
        assert!(matches!(agent.complete(&request("unknown", 0)), Err(AgentError::Llm(LlmError::UnknownTask))));
    }

    #[test]
    fn flip_z_only_negates_vertical_components() {
        let corpus = samples();
        let oracle = Agent::Oracle { corpus: corpus.clone() };
        let faulty = Agent::Faulty { corpus: corpus.clone(), fault: Fault::FlipZSign };
        for t in &corpus.tasks {
            let r = request(&t.query, 0);
            let good = execute_program(&code_of(&oracle.complete(&r).unwrap())).unwrap();
            let bad = execute_program(&code_of(&faulty.complete(&r).unwrap())).unwrap();
            assert_eq!(good.len(), bad.len());
            for (g, b) in good.iter().zip(&bad) {
                assert_eq!((g.dx, g.dy, g.dyaw), (b.dx, b.dy, b.dyaw));
                assert!((g.dz + b.dz).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn emit_prose_has_no_fence() {
        let agent = Agent::Faulty { corpus: samples(), fault: Fault::EmitProse };
        let text = agent.complete(&request(&sample_tasks()[0].query, 0)).unwrap();
        assert!(!text.contains("```"));
        assert!(crate::skillscript::parse(&text).is_err());
        assert_eq!("emit_prose".parse::<Fault>().unwrap(), Fault::EmitProse);
        assert!("melt".parse::<Fault>().is_err());
    }

    #[test]
    fn replay_record_and_strict_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Arc::new(ResponseCache::open(dir.path()).unwrap());
        let strict = Agent::Replay { cache: cache.clone(), strict: true, upstream: None };
        assert!(matches!(strict.complete(&request("q", 0)), Err(AgentError::Llm(LlmError::CacheMiss))));

        let recorder = Agent::Replay {
            cache: cache.clone(),
            strict: false,
            upstream: Some(Box::new(Agent::Oracle { corpus: samples() })),
        };
        let q = sample_tasks()[1].query.clone();
        let recorded = recorder.complete(&request(&q, 0)).unwrap();
        assert_eq!(strict.complete(&request(&q, 0)).unwrap(), recorded);
        assert_eq!(cache.len(), 1);

        let reopened = ResponseCache::open(dir.path()).unwrap();
        assert_eq!(reopened.get(&request(&q, 0)).unwrap().as_deref(), Some(recorded.as_str()));
        let line = std::fs::read_to_string(reopened.path()).unwrap();
        let rec: CacheRecord = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(rec.request_hash, cache_key(&request(&q, 0)));
        assert_eq!(rec.model, "m");
    }

    #[test]
    fn collision_is_a_hard_error() {
        let dir = tempfile::tempdir().unwrap();
        let real = request("q", 0);
        let forged = CacheRecord {
            request_hash: cache_key(&real),
            response_text: "x".into(),
            model: "m".into(),
            timestamp: 0,
            request: request("other", 0),
        };
        std::fs::write(dir.path().join(CACHE_FILE_NAME), serde_json::to_string(&forged).unwrap() + "\n").unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        assert!(matches!(cache.get(&real), Err(CacheError::Collision(_))));
        assert!(matches!(cache.insert(&real, "y"), Err(CacheError::Collision(_))));
        std::fs::write(dir.path().join(CACHE_FILE_NAME), "not json\n").unwrap();
        assert!(matches!(ResponseCache::open(dir.path()), Err(CacheError::Corrupt { line: 1, .. })));
    }

    // --- stub server -------------------------------------------------------

    struct Stub {
        url: String,
        hits: Arc<AtomicUsize>,
        bodies: Arc<Mutex<Vec<serde_json::Value>>>,
    }

    fn read_request(stream: &mut TcpStream) -> (String, serde_json::Value) {
        let mut buf = Vec::new();
        let mut chunk = [0u8; 4096];
        loop {
            let n = stream.read(&mut chunk).unwrap();
            buf.extend_from_slice(&chunk[..n]);
            if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                let head = String::from_utf8_lossy(&buf[..pos]).to_string();
                let len = head
                    .lines()
                    .find_map(|l| {
                        let (k, v) = l.split_once(':')?;
                        k.eq_ignore_ascii_case("content-length").then(|| v.trim().parse::<usize>().unwrap())
                    })
                    .unwrap_or(0);
                while buf.len() < pos + 4 + len {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                }
                let body = serde_json::from_slice(&buf[pos + 4..pos + 4 + len]).unwrap();
                return (head, body);
            }
            if n == 0 {
                panic!("connection closed early");
            }
        }
    }

    fn respond(stream: &mut TcpStream, status: &str, body: &str) {
        let msg = format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        stream.write_all(msg.as_bytes()).unwrap();
    }

    /// `handler(hit_number, body)` returns (status line, body, delay).
    fn stub<F>(handler: F) -> Stub
    where
        F: Fn(usize, &serde_json::Value) -> (String, String, u64) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let handler = Arc::new(handler);
        let (h, b) = (hits.clone(), bodies.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let mut stream = stream.unwrap();
                let (h, b, handler) = (h.clone(), b.clone(), handler.clone());
                std::thread::spawn(move || {
                    let (head, body) = read_request(&mut stream);
                    assert!(head.starts_with("POST /v1/chat/completions "), "{head}");
                    let n = h.fetch_add(1, Ordering::SeqCst);
                    b.lock().unwrap().push(body.clone());
                    let (status, text, delay) = handler(n, &body);
                    std::thread::sleep(Duration::from_millis(delay));
                    respond(&mut stream, &status, &text);
                });
            }
        });
        Stub { url, hits, bodies }
    }

    fn completion(content: &str, finish: &str) -> String {
        serde_json::json!({"choices":[{"message":{"role":"assistant","content":content},"finish_reason":finish}]})
            .to_string()
    }

    fn http(url: &str, attempts: u32, concurrency: usize) -> HttpAgent {
        HttpAgent::new(HttpConfig {
            base_url: url.into(),
            api_key_env: "GSCE_TEST_KEY_UNSET".into(),
            timeout_secs: 10.0,
            max_attempts: attempts,
            backoff_base_ms: 5,
            backoff_max_ms: 20,
            max_concurrency: concurrency,
            ..HttpConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn http_request_shape_and_retry() {
        let s = stub(|n, _| {
            if n < 2 {
                ("503 Service Unavailable".into(), "{}".into(), 0)
            } else {
                ("200 OK".into(), completion("```\ntakeoff()\n```", "stop"), 0)
            }
        });
        let agent = http(&s.url, 3, 1);
        assert_eq!(agent.complete(&request("q", 0)).unwrap(), "```\ntakeoff()\n```");
        assert_eq!(s.hits.load(Ordering::SeqCst), 3);
        let body = s.bodies.lock().unwrap()[0].clone();
        assert_eq!(body["model"], "m");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["max_tokens"], DEFAULT_MAX_TOKENS);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][0]["content"], "sys");
        assert_eq!(body["messages"][1]["role"], "user");
        assert_eq!(body["messages"][1]["content"], "q");
    }

    #[test]
    fn http_gives_up_and_does_not_retry_client_errors() {
        let s = stub(|_, _| ("500 Internal Server Error".into(), "boom".into(), 0));
        let err = http(&s.url, 2, 1).complete(&request("q", 0)).unwrap_err();
        assert!(matches!(err, LlmError::Status { status: 500, .. }));
        assert_eq!(s.hits.load(Ordering::SeqCst), 2);

        let s = stub(|_, _| ("400 Bad Request".into(), "nope".into(), 0));
        assert!(matches!(http(&s.url, 3, 1).complete(&request("q", 0)), Err(LlmError::Status { status: 400, .. })));
        assert_eq!(s.hits.load(Ordering::SeqCst), 1);

        let s = stub(|_, _| ("200 OK".into(), completion("partial", "length"), 0));
        assert_eq!(http(&s.url, 3, 1).complete(&request("q", 0)), Err(LlmError::Truncated));

        let s = stub(|_, _| ("200 OK".into(), "{\"choices\":[]}".into(), 0));
        assert!(matches!(http(&s.url, 3, 1).complete(&request("q", 0)), Err(LlmError::Malformed(_))));
    }

    #[test]
    fn http_connection_refused_is_transport_error() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let err = http(&format!("http://127.0.0.1:{port}/v1"), 2, 1).complete(&request("q", 0)).unwrap_err();
        assert!(matches!(err, LlmError::Transport(_)), "{err:?}");
    }

    #[test]
    fn http_parallel_requests_are_not_cross_wired() {
        // echo the user text back after a variable delay
        let s = stub(|n, body| {
            let user = body["messages"][1]["content"].as_str().unwrap().to_string();
            ("200 OK".into(), completion(&format!("echo {user}"), "stop"), (7 * n as u64) % 40)
        });
        let agent = http(&s.url, 1, 4);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..16)
                .map(|i| {
                    let agent = &agent;
                    scope.spawn(move || (i, agent.complete(&request(&format!("task {i}"), 0)).unwrap()))
                })
                .collect();
            for h in handles {
                let (i, text) = h.join().unwrap();
                assert_eq!(text, format!("echo task {i}"));
            }
        });
        assert_eq!(s.hits.load(Ordering::SeqCst), 16);
    }

    #[test]
    fn concurrency_cap_is_enforced() {
        let in_flight = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (f, p) = (in_flight.clone(), peak.clone());
        let s = stub(move |_, _| {
            let now = f.fetch_add(1, Ordering::SeqCst) + 1;
            p.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(30));
            f.fetch_sub(1, Ordering::SeqCst);
            ("200 OK".into(), completion("ok", "stop"), 0)
        });
        let agent = http(&s.url, 1, 2);
        std::thread::scope(|scope| {
            for i in 0..8 {
                let agent = &agent;
                scope.spawn(move || agent.complete(&request(&format!("{i}"), 0)).unwrap());
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2, "peak {}", peak.load(Ordering::SeqCst));
    }
}
