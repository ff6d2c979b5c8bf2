//! Deterministic offline backends.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, CallOutcome, CallRecord, ChatBackend, ChatRequest, Completion, EmbeddingBackend};
use crate::context::QUERY_LABEL;
use crate::facts::parse_markers;
use crate::tokens::TokenCounter;

pub const UNKNOWN_ANSWER: &str = "UNKNOWN";

const PROBE_OPEN: &str = "[keys:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedBehavior {
    /// Answers a probe with every value of the probed keys found in the context.
    EchoFactIfPresent,
    FixedResponse(String),
    FailWithError(String),
}

/// Affine latency model, `base_ms + per_token_ms * input_tokens`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub base_ms: f64,
    pub per_token_ms: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        // ~600 ms at 180 tokens, ~10 s at 120k tokens.
        Self {
            base_ms: 586.0,
            per_token_ms: 0.0784,
        }
    }
}

impl LatencyModel {
    pub fn latency_ms(&self, input_tokens: u64) -> f64 {
        self.base_ms + self.per_token_ms * input_tokens as f64
    }
}

/// Tag appended to probe questions naming the fact keys being asked about.
pub fn probe_tag(keys: &[&str]) -> String {
    format!("{PROBE_OPEN} {}]", keys.join(", "))
}

/// Keys named by the last probe tag in `query`.
pub fn parse_probe_keys(query: &str) -> Vec<String> {
    let Some(start) = query.rfind(PROBE_OPEN) else {
        return Vec::new();
    };
    let rest = &query[start + PROBE_OPEN.len()..];
    let Some(end) = rest.find(']') else {
        return Vec::new();
    };
    rest[..end]
        .split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(str::to_string)
        .collect()
}

/// The echo rule: for each probed key, the distinct values whose markers
/// appear in `context`, in order of appearance and joined with ", ". Answers
/// for different keys are joined with "; ". A key with no marker answers
/// [`UNKNOWN_ANSWER`].
pub fn echo_answer(context: &str, keys: &[String]) -> String {
    if keys.is_empty() {
        return UNKNOWN_ANSWER.to_string();
    }
    let markers = parse_markers(context);
    keys.iter()
        .map(|k| {
            let mut seen: Vec<&str> = Vec::new();
            for m in markers.iter().filter(|m| &m.key == k) {
                if !seen.contains(&m.value.as_str()) {
                    seen.push(&m.value);
                }
            }
            if seen.is_empty() {
                UNKNOWN_ANSWER.to_string()
            } else {
                seen.join(", ")
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Splits a serialized request into the visible context and the query text.
fn split_query(system: &str, user: &str) -> (String, String) {
    let marker = format!("{QUERY_LABEL} ");
    let (before, query) = match user.rfind(&format!("\n{marker}")) {
        Some(i) => (&user[..i], &user[i + 1 + marker.len()..]),
        None => match user.strip_prefix(&marker) {
            Some(q) => ("", q),
            None => (user, ""),
        },
    };
    (format!("{system}\n{before}"), query.to_string())
}

#[derive(Debug, Clone)]
pub struct ScriptedChat {
    model: String,
    behavior: ScriptedBehavior,
    latency: LatencyModel,
    hard_limit: u64,
    counter: TokenCounter,
}

impl ScriptedChat {
    pub fn new(model: String, behavior: ScriptedBehavior, latency: LatencyModel, hard_limit: u64) -> Self {
        Self {
            model,
            behavior,
            latency,
            hard_limit,
            counter: TokenCounter::default(),
        }
    }

    pub fn echo() -> Self {
        Self::new(
            "scripted".into(),
            ScriptedBehavior::EchoFactIfPresent,
            LatencyModel::default(),
            super::DEFAULT_HARD_LIMIT,
        )
    }

    pub fn behavior(&self) -> &ScriptedBehavior {
        &self.behavior
    }
}

impl ChatBackend for ScriptedChat {
    fn model(&self) -> &str {
        &self.model
    }

    fn hard_limit(&self) -> u64 {
        self.hard_limit
    }

    fn simulated(&self) -> bool {
        true
    }

    fn send(&self, request: &ChatRequest) -> Completion {
        let latency_ms = self.latency.latency_ms(request.input_tokens);
        let result = match &self.behavior {
            ScriptedBehavior::EchoFactIfPresent => {
                let (context, query) = split_query(&request.system, &request.user);
                Ok(echo_answer(&context, &parse_probe_keys(&query)))
            }
            ScriptedBehavior::FixedResponse(text) => Ok(text.clone()),
            ScriptedBehavior::FailWithError(msg) => Err(BackendError::Scripted(msg.clone())),
        };
        let (output_tokens, outcome) = match &result {
            Ok(text) => (self.counter.count(text) as u64, CallOutcome::Ok),
            Err(_) => (0, CallOutcome::Error),
        };
        Completion {
            result,
            record: CallRecord {
                input_tokens: request.input_tokens,
                output_tokens,
                latency_ms,
                simulated: true,
                outcome,
            },
        }
    }
}

/// Hash-derived embeddings.
///
/// Each distinct content word maps to a fixed pseudo-random ±1 direction
/// seeded from its hash; a text embeds as the normalized sum over its distinct
/// words. Texts that share vocabulary land close together, unrelated texts are
/// near-orthogonal, and every vector is stable across runs and platforms.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at",
    "be", "been", "before", "being", "but", "by", "can", "could", "did", "do", "does", "for",
    "from", "had", "has", "have", "he", "her", "here", "his", "how", "i", "if", "in", "into",
    "is", "it", "its", "just", "let", "me", "more", "my", "no", "not", "now", "of", "on", "or",
    "our", "out", "she", "so", "some", "than", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "to", "up", "us", "was", "we", "were", "what", "when", "where",
    "which", "while", "who", "why", "will", "with", "would", "you", "your",
];

/// Lowercased content words of `text`, deduplicated, in first-seen order.
pub(crate) fn content_words(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for raw in text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '.')) {
        let w = raw.trim_matches('.').to_lowercase();
        if w.is_empty() || STOPWORDS.contains(&w.as_str()) || out.contains(&w) {
            continue;
        }
        out.push(w);
    }
    out
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    fn add_word(&self, acc: &mut [f64], word: &str) {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(word.as_bytes());
        let digest = h.finalize();
        let mut state = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let mut bits = 0u64;
        for (i, slot) in acc.iter_mut().enumerate() {
            if i % 64 == 0 {
                bits = splitmix(&mut state);
            }
            *slot += if bits >> (i % 64) & 1 == 1 { 1.0 } else { -1.0 };
        }
    }

    pub fn embed_words(&self, text: &str) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let words = content_words(text);
        if words.is_empty() {
            self.add_word(&mut acc, &text.trim().to_lowercase());
        } else {
            for w in &words {
                self.add_word(&mut acc, w);
            }
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            acc.iter_mut().for_each(|x| *x /= norm);
        }
        acc
    }
}

impl EmbeddingBackend for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        Ok(self.embed_words(text))
    }
}
