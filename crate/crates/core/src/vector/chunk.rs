//! Token-aware recursive chunking of a serialized history.
//!
//! Positions are measured in collapsed characters (see
//! [`crate::tokens::collapsed_char_starts`]), so with the heuristic counter a
//! window of `size * chars_per_token` positions is exactly `size` tokens and
//! an overlap of `overlap * chars_per_token` positions is exactly `overlap`
//! tokens. Each chunk ends at the last split point in the back half of its
//! window, preferring message boundaries, then paragraph breaks, sentence
//! ends, any whitespace, and finally a hard cut.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::message::Message;
use crate::tokens::{collapsed_char_starts, TokenCounter};

pub const DEFAULT_CHUNK_TOKENS: usize = 500;
pub const DEFAULT_OVERLAP_TOKENS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChunkError {
    #[error("chunk size {size} must exceed overlap {overlap}")]
    InvalidSizes { size: usize, overlap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: u64,
    pub text: String,
    /// First and last message index the chunk touches.
    pub source_span: (u64, u64),
    pub token_count: u64,
    pub byte_start: usize,
    pub byte_end: usize,
    /// Leading bytes shared with the previous chunk.
    pub overlap_bytes: usize,
}

/// The history as the chunker sees it: rendered turns joined by newlines.
pub fn serialize_history(messages: &[Message]) -> String {
    messages.iter().map(Message::render).collect::<Vec<_>>().join("\n")
}

/// Rebuilds the serialized history from chunks by dropping each overlap.
pub fn dechunk(chunks: &[Chunk]) -> String {
    let mut out = String::new();
    for c in chunks {
        out.push_str(&c.text[c.overlap_bytes..]);
    }
    out
}

/// Candidate split positions by preference, each sorted ascending.
struct SplitPoints {
    tiers: [Vec<usize>; 4],
}

impl SplitPoints {
    fn scan(text: &str, starts: &[usize], message_starts: &[usize]) -> Self {
        let mut message = Vec::new();
        let mut paragraph = Vec::new();
        let mut sentence = Vec::new();
        let mut whitespace = Vec::new();
        let mut ms = message_starts.iter().peekable();
        let bytes = text.as_bytes();
        for (pos, &b) in starts.iter().enumerate().skip(1) {
            if b == text.len() {
                break;
            }
            while ms.peek().is_some_and(|&&m| m < b) {
                ms.next();
            }
            if ms.peek().is_some_and(|&&m| m == b) {
                message.push(pos);
                continue;
            }
            let prev = starts[pos - 1];
            let prev_char = text[prev..b].chars().next().expect("non-empty");
            if !prev_char.is_whitespace() {
                continue;
            }
            let run = &text[prev..b];
            if run.matches('\n').count() >= 2 {
                paragraph.push(pos);
            } else if pos >= 2 && matches!(bytes[starts[pos - 2]], b'.' | b'!' | b'?') {
                sentence.push(pos);
            } else {
                whitespace.push(pos);
            }
        }
        Self {
            tiers: [message, paragraph, sentence, whitespace],
        }
    }

    /// Best split in `(lo, hi]`, or `hi` when there is none.
    fn best(&self, lo: usize, hi: usize) -> usize {
        for tier in &self.tiers {
            let i = tier.partition_point(|&p| p <= hi);
            if i > 0 && tier[i - 1] > lo {
                return tier[i - 1];
            }
        }
        hi
    }
}

/// Splits `messages` into overlapping chunks of at most `chunk_size` tokens.
pub fn chunk_history(
    messages: &[Message],
    chunk_size: usize,
    overlap: usize,
    counter: &TokenCounter,
) -> Result<Vec<Chunk>, ChunkError> {
    if chunk_size <= overlap {
        return Err(ChunkError::InvalidSizes {
            size: chunk_size,
            overlap,
        });
    }
    if messages.is_empty() {
        return Ok(Vec::new());
    }
    let text = serialize_history(messages);
    let mut message_starts = Vec::with_capacity(messages.len());
    let mut at = 0;
    for m in messages {
        message_starts.push(at);
        at += m.render().len() + 1;
    }
    let starts = collapsed_char_starts(&text);
    let n = starts.len() - 1;
    let cpt = counter.chars_per_token();
    let size = chunk_size * cpt;
    let step_back = overlap * cpt;
    let splits = SplitPoints::scan(&text, &starts, &message_starts);

    let span_of = |b0: usize, b1: usize| {
        let first = message_starts.partition_point(|&m| m <= b0) - 1;
        let last = message_starts.partition_point(|&m| m < b1) - 1;
        (messages[first].index, messages[last].index)
    };

    let mut chunks = Vec::new();
    let mut s = 0usize;
    let mut prev_end: Option<usize> = None;
    loop {
        let end = if n - s <= size {
            n
        } else {
            splits.best(s + size / 2, s + size)
        };
        let (b0, b1) = (starts[s], starts[end]);
        let chunk_text = text[b0..b1].to_string();
        chunks.push(Chunk {
            id: chunks.len() as u64,
            token_count: counter.count(&chunk_text) as u64,
            source_span: span_of(b0, b1),
            text: chunk_text,
            byte_start: b0,
            byte_end: b1,
            overlap_bytes: prev_end.map_or(0, |p| starts[p] - b0),
        });
        if end == n {
            break;
        }
        prev_end = Some(end);
        s = end - step_back;
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::alternating_role;
    use proptest::prelude::*;

    fn c() -> TokenCounter {
        TokenCounter::default()
    }

    fn one_message(chars: usize) -> Vec<Message> {
        // "USER: " is 6 characters; pad the rest with an unbroken token.
        vec![Message::new(0, crate::message::Role::User, "x".repeat(chars - 6), &c())]
    }

    #[test]
    fn short_history_is_one_chunk() {
        let chunks = chunk_history(&one_message(1600), 500, 50, &c()).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].token_count, 400);
    }

    #[test]
    fn nine_fifty_tokens_split_at_500_with_50_overlap() {
        let msgs = one_message(3800);
        let chunks = chunk_history(&msgs, 500, 50, &c()).unwrap();
        assert_eq!(chunks.len(), 2);
        assert_eq!((chunks[0].byte_start / 4, chunks[0].byte_end / 4), (0, 500));
        assert_eq!((chunks[1].byte_start / 4, chunks[1].byte_end / 4), (450, 950));
        assert_eq!(c().count(&chunks[1].text[..chunks[1].overlap_bytes]), 50);
    }

    #[test]
    fn empty_and_invalid() {
        assert!(chunk_history(&[], 500, 50, &c()).unwrap().is_empty());
        assert_eq!(
            chunk_history(&one_message(10), 50, 50, &c()),
            Err(ChunkError::InvalidSizes { size: 50, overlap: 50 })
        );
    }

    #[test]
    fn prefers_message_boundaries() {
        let msgs: Vec<Message> = (0..40)
            .map(|i| Message::new(i, alternating_role(i), "word. ".repeat(20).trim_end().to_string(), &c()))
            .collect();
        let chunks = chunk_history(&msgs, 500, 50, &c()).unwrap();
        let text = serialize_history(&msgs);
        for ch in &chunks[..chunks.len() - 1] {
            let rest = &text[ch.byte_end..];
            assert!(rest.starts_with("USER: ") || rest.starts_with("AGENT: "), "{:?}", &rest[..10]);
        }
        assert_eq!(dechunk(&chunks), text);
    }

    #[test]
    fn spans_cover_touched_messages() {
        let msgs: Vec<Message> = (0..30)
            .map(|i| Message::new(i, alternating_role(i), "lorem ipsum ".repeat(30), &c()))
            .collect();
        let chunks = chunk_history(&msgs, 500, 50, &c()).unwrap();
        assert_eq!(chunks[0].source_span.0, 0);
        assert_eq!(chunks.last().unwrap().source_span.1, 29);
        for w in chunks.windows(2) {
            assert!(w[1].source_span.0 <= w[0].source_span.1 + 1);
        }
    }

    fn history_strategy() -> impl Strategy<Value = Vec<Message>> {
        let word = prop_oneof![
            Just("the".to_string()),
            Just("threshold.".to_string()),
            "[a-z]{1,12}",
            Just("\n\n".to_string()),
            Just("  ".to_string()),
            Just("p<0.05;".to_string()),
            Just("naïve".to_string()),
        ];
        prop::collection::vec(prop::collection::vec(word, 1..200), 1..60).prop_map(|turns| {
            turns
                .into_iter()
                .enumerate()
                .map(|(i, words)| Message::new(i as u64, alternating_role(i as u64), words.join(" "), &c()))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reconstruction_and_bounds(msgs in history_strategy()) {
            let chunks = chunk_history(&msgs, 500, 50, &c()).unwrap();
            prop_assert_eq!(dechunk(&chunks), serialize_history(&msgs));
            for ch in &chunks {
                prop_assert!(ch.token_count <= 500);
            }
            for ch in chunks.iter().skip(1) {
                prop_assert_eq!(c().count(&ch.text[..ch.overlap_bytes]), 50);
            }
        }
    }
}
