//! OpenAI-compatible HTTP chat and embedding clients.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{BackendError, CallOutcome, CallRecord, ChatBackend, ChatRequest, Completion, EmbeddingBackend};
use crate::tokens::TokenCounter;

/// Sends a JSON body and returns the raw response body of a 2xx reply.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, body: &[u8], bearer: Option<&str>) -> Result<Vec<u8>, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retries: 2,
            initial_backoff: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    /// Runs `op`, retrying transient failures with doubling backoff.
    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T, BackendError>) -> Result<T, BackendError> {
        let mut backoff = self.initial_backoff;
        let mut attempt = 0;
        loop {
            match op() {
                Err(e) if e.is_transient() && attempt < self.retries => {
                    log::warn!("transient backend error (attempt {}): {e}", attempt + 1);
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

pub struct HttpTransport {
    agent: ureq::Agent,
    retry: RetryPolicy,
}

impl HttpTransport {
    pub fn new(timeout: Duration, retry: RetryPolicy) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent, retry }
    }

    fn post_once(&self, url: &str, body: &[u8], bearer: Option<&str>) -> Result<Vec<u8>, BackendError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = bearer {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req
            .send(body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let bytes = resp
            .body_mut()
            .read_to_vec()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if (200..300).contains(&status) {
            Ok(bytes)
        } else {
            Err(BackendError::Status {
                status,
                body: String::from_utf8_lossy(&bytes).into_owned(),
            })
        }
    }
}

impl Transport for HttpTransport {
    fn post(&self, url: &str, body: &[u8], bearer: Option<&str>) -> Result<Vec<u8>, BackendError> {
        self.retry.run(|| self.post_once(url, body, bearer))
    }
}

fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path)
}

pub struct HttpChat {
    endpoint: String,
    model: String,
    hard_limit: u64,
    bearer: Option<String>,
    transport: Arc<dyn Transport>,
    counter: TokenCounter,
}

impl HttpChat {
    pub fn new(
        endpoint: String,
        model: String,
        hard_limit: u64,
        bearer: Option<String>,
        transport: Arc<dyn Transport>,
    ) -> Self {
        Self {
            endpoint,
            model,
            hard_limit,
            bearer,
            transport,
            counter: TokenCounter::default(),
        }
    }

    pub fn request_body(&self, request: &ChatRequest) -> Value {
        let mut messages = Vec::new();
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        messages.push(json!({"role": "user", "content": request.user}));
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }
}

fn parse_chat(bytes: &[u8]) -> Result<(String, Option<u64>, Option<u64>), BackendError> {
    let v: Value = serde_json::from_slice(bytes).map_err(|e| BackendError::Parse(e.to_string()))?;
    let text = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| BackendError::Parse("missing choices[0].message.content".into()))?
        .to_string();
    let usage = &v["usage"];
    Ok((text, usage["prompt_tokens"].as_u64(), usage["completion_tokens"].as_u64()))
}

impl ChatBackend for HttpChat {
    fn model(&self) -> &str {
        &self.model
    }

    fn hard_limit(&self) -> u64 {
        self.hard_limit
    }

    fn simulated(&self) -> bool {
        false
    }

    fn send(&self, request: &ChatRequest) -> Completion {
        let body = serde_json::to_vec(&self.request_body(request)).expect("json body");
        let url = join_url(&self.endpoint, "chat/completions");
        let started = Instant::now();
        let result = self
            .transport
            .post(&url, &body, self.bearer.as_deref())
            .and_then(|bytes| parse_chat(&bytes));
        let latency_ms = started.elapsed().as_secs_f64() * 1000.0;
        let mut record = CallRecord {
            input_tokens: request.input_tokens,
            output_tokens: 0,
            latency_ms,
            simulated: false,
            outcome: CallOutcome::Error,
        };
        let result = result.map(|(text, prompt, completion)| {
            record.outcome = CallOutcome::Ok;
            record.input_tokens = prompt.unwrap_or(request.input_tokens);
            record.output_tokens = completion.unwrap_or(self.counter.count(&text) as u64);
            text
        });
        Completion { result, record }
    }
}

pub struct HttpEmbedding {
    endpoint: String,
    model: String,
    dim: usize,
    bearer: Option<String>,
    transport: Arc<dyn Transport>,
}

impl HttpEmbedding {
    pub fn new(
        endpoint: String,
        model: String,
        dim: usize,
        bearer: Option<String>,
        transport: Arc<dyn Transport>,
    ) -> Self {
        Self {
            endpoint,
            model,
            dim,
            bearer,
            transport,
        }
    }
}

impl EmbeddingBackend for HttpEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let body = serde_json::to_vec(&json!({"model": self.model, "input": text})).expect("json body");
        let bytes = self
            .transport
            .post(&join_url(&self.endpoint, "embeddings"), &body, self.bearer.as_deref())?;
        let v: Value = serde_json::from_slice(&bytes).map_err(|e| BackendError::Parse(e.to_string()))?;
        let arr = v["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| BackendError::Parse("missing data[0].embedding".into()))?;
        let mut out = arr
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| BackendError::Parse("non-numeric embedding".into())))
            .collect::<Result<Vec<f64>, _>>()?;
        if out.len() != self.dim {
            return Err(BackendError::Parse(format!(
                "embedding has {} dimensions, expected {}",
                out.len(),
                self.dim
            )));
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            out.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(out)
    }
}

#[cfg(test)]
pub(crate) mod mock {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    use std::thread;

    /// Minimal HTTP/1.1 server answering each request with the next
    /// `(status, body)` pair from `replies`; the last pair repeats.
    pub fn serve(replies: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, Arc<std::sync::Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(std::sync::Mutex::new(Vec::new()));
        let (h, b) = (Arc::clone(&hits), Arc::clone(&bodies));
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                    if lower.starts_with("authorization:") {
                        auth = line.trim().to_string();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).ok();
                b.lock().unwrap().push(format!("{auth}|{}", String::from_utf8_lossy(&body)));
                let n = h.fetch_add(1, Ordering::SeqCst);
                let (status, text) = replies[n.min(replies.len() - 1)].clone();
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                );
                stream.write_all(resp.as_bytes()).ok();
            }
        });
        (format!("http://{addr}/v1"), hits, bodies)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::Ordering;

    fn fast_transport() -> Arc<dyn Transport> {
        Arc::new(HttpTransport::new(
            Duration::from_secs(5),
            RetryPolicy {
                retries: 2,
                initial_backoff: Duration::from_millis(5),
            },
        ))
    }

    fn request() -> ChatRequest {
        ChatRequest {
            system: "sys".into(),
            user: "QUERY: hi".into(),
            input_tokens: 5,
            temperature: 0.7,
            max_output_tokens: 16,
        }
    }

    const OK_BODY: &str = r#"{"choices":[{"message":{"role":"assistant","content":"0.001"}}],"usage":{"prompt_tokens":11,"completion_tokens":2}}"#;

    #[test]
    fn chat_roundtrip_and_usage() {
        let (url, _, bodies) = mock::serve(vec![(200, OK_BODY.into())]);
        let chat = HttpChat::new(url, "m".into(), 128_000, Some("tok".into()), fast_transport());
        let out = chat.complete(&request());
        assert_eq!(out.text(), Some("0.001"));
        assert_eq!(out.record.input_tokens, 11);
        assert_eq!(out.record.output_tokens, 2);
        assert!(!out.record.simulated);
        let seen = bodies.lock().unwrap()[0].clone();
        assert!(seen.to_ascii_lowercase().starts_with("authorization: bearer tok|"));
        assert!(seen.contains("\"max_tokens\":16"));
    }

    #[test]
    fn retries_transient_then_succeeds() {
        let (url, hits, _) = mock::serve(vec![(503, "{}".into()), (500, "{}".into()), (200, OK_BODY.into())]);
        let chat = HttpChat::new(url, "m".into(), 128_000, None, fast_transport());
        assert_eq!(chat.complete(&request()).text(), Some("0.001"));
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_two_retries() {
        let (url, hits, _) = mock::serve(vec![(503, "{}".into())]);
        let chat = HttpChat::new(url, "m".into(), 128_000, None, fast_transport());
        let out = chat.complete(&request());
        assert!(matches!(out.result, Err(BackendError::Status { status: 503, .. })));
        assert_eq!(out.record.outcome, CallOutcome::Error);
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, hits, _) = mock::serve(vec![(400, "{}".into())]);
        let chat = HttpChat::new(url, "m".into(), 128_000, None, fast_transport());
        assert!(chat.complete(&request()).result.is_err());
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn embedding_roundtrip_normalizes() {
        let (url, _, _) = mock::serve(vec![(200, r#"{"data":[{"embedding":[3.0,4.0]}]}"#.into())]);
        let e = HttpEmbedding::new(url.clone(), "e".into(), 2, None, fast_transport());
        let v = e.embed("x").unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.8).abs() < 1e-12);
        let wrong = HttpEmbedding::new(url, "e".into(), 3, None, fast_transport());
        assert!(matches!(wrong.embed("x"), Err(BackendError::Parse(_))));
    }
}
