//! The `FACT key=value;` marker grammar.
//!
//! Synthetic generators embed markers inside ordinary carrier sentences. The
//! rule-based consolidator, the scripted chat backend, and the answerability
//! checks all read facts back through this one parser.
//!
//! Grammar: the literal word `FACT` (not preceded by an alphanumeric
//! character), one space, a key of `[A-Za-z0-9_.-]+`, `=`, then a non-empty
//! value that runs to the next `;` on the same line. A marker without its
//! terminating `;` (for example one cut off at a chunk boundary) is ignored.

use std::collections::HashMap;

use thiserror::Error;

use crate::message::Message;

const PREFIX: &str = "FACT ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactError {
    #[error("invalid fact key {0:?}")]
    InvalidKey(String),
    #[error("invalid fact value {0:?}")]
    InvalidValue(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactMarker {
    pub key: String,
    pub value: String,
    /// Byte offset of the `FACT` keyword in the scanned text.
    pub offset: usize,
}

fn is_key_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')
}

pub fn validate(key: &str, value: &str) -> Result<(), FactError> {
    if key.is_empty() || !key.chars().all(is_key_char) {
        return Err(FactError::InvalidKey(key.to_string()));
    }
    if value.trim().is_empty() || value.contains([';', '\n', '\r']) || value != value.trim() {
        return Err(FactError::InvalidValue(value.to_string()));
    }
    Ok(())
}

/// Renders a marker. Callers are expected to have validated the parts.
pub fn render_marker(key: &str, value: &str) -> String {
    format!("{PREFIX}{key}={value};")
}

/// All well-formed markers in `text`, in order of appearance.
pub fn parse_markers(text: &str) -> Vec<FactMarker> {
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(rel) = text[from..].find(PREFIX) {
        let at = from + rel;
        from = at + PREFIX.len();
        if text[..at]
            .chars()
            .next_back()
            .is_some_and(|c| c.is_alphanumeric())
        {
            continue;
        }
        let rest = &text[from..];
        let key_len = rest
            .char_indices()
            .find(|&(_, c)| !is_key_char(c))
            .map_or(rest.len(), |(i, _)| i);
        if key_len == 0 || !rest[key_len..].starts_with('=') {
            continue;
        }
        let key = &rest[..key_len];
        let after = &rest[key_len + 1..];
        let Some(end) = after.find([';', '\n']) else {
            continue;
        };
        if !after[end..].starts_with(';') {
            continue;
        }
        let value = after[..end].trim();
        if value.is_empty() {
            continue;
        }
        out.push(FactMarker {
            key: key.to_string(),
            value: value.to_string(),
            offset: at,
        });
        from += key_len + 1 + end + 1;
    }
    out
}

/// Every value asserted for each key across a conversation, in message order.
///
/// This is the deterministic extractor used to check that probe answers are
/// recoverable from the raw log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactTable {
    order: Vec<String>,
    values: HashMap<String, Vec<(String, u64)>>,
}

impl FactTable {
    pub fn from_messages(messages: &[Message]) -> Self {
        let mut table = Self::default();
        for m in messages {
            for f in parse_markers(&m.text) {
                table.push(f.key, f.value, m.index);
            }
        }
        table
    }

    pub fn push(&mut self, key: String, value: String, index: u64) {
        let entry = self.values.entry(key.clone()).or_insert_with(|| {
            self.order.push(key);
            Vec::new()
        });
        entry.push((value, index));
    }

    /// Keys in order of first assertion.
    pub fn keys(&self) -> &[String] {
        &self.order
    }

    pub fn values(&self, key: &str) -> Vec<&str> {
        self.values
            .get(key)
            .map(|v| v.iter().map(|(s, _)| s.as_str()).collect())
            .unwrap_or_default()
    }

    /// `(value, message index)` pairs for a key.
    pub fn history(&self, key: &str) -> &[(String, u64)] {
        self.values.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn latest(&self, key: &str) -> Option<&str> {
        self.values.get(key)?.last().map(|(v, _)| v.as_str())
    }

    pub fn first(&self, key: &str) -> Option<&str> {
        self.values.get(key)?.first().map(|(v, _)| v.as_str())
    }
}
