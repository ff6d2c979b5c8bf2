//! Full-context baseline: the whole history, truncated to a token suffix.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::DEFAULT_HARD_LIMIT;
use crate::context::{AssembledContext, ContextError};
use crate::message::Message;
use crate::tokens::TokenCounter;

pub const DEFAULT_TRUNCATION_LIMIT: u64 = 120_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FullContextError {
    #[error("message of {tokens} tokens exceeds the {limit}-token truncation limit")]
    MessageTooLarge { tokens: u64, limit: u64 },
    #[error("out-of-sequence message: expected index {expected}, got {got}")]
    OutOfSequence { expected: u64, got: u64 },
    #[error(transparent)]
    Context(#[from] ContextError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullContextLimits {
    /// `None` keeps every message, so long runs overflow the model limit.
    pub truncation_limit: Option<u64>,
    pub hard_model_limit: u64,
}

impl Default for FullContextLimits {
    fn default() -> Self {
        Self {
            truncation_limit: Some(DEFAULT_TRUNCATION_LIMIT),
            hard_model_limit: DEFAULT_HARD_LIMIT,
        }
    }
}

/// Retained suffix of the conversation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullHistory {
    messages: VecDeque<Message>,
    cumulative_tokens: u64,
    total_appended: u64,
    dropped: u64,
    limits: FullContextLimits,
}

impl FullHistory {
    pub fn new(limits: FullContextLimits) -> Self {
        Self {
            messages: VecDeque::new(),
            cumulative_tokens: 0,
            total_appended: 0,
            dropped: 0,
            limits,
        }
    }

    pub fn limits(&self) -> FullContextLimits {
        self.limits
    }

    pub fn cumulative_tokens(&self) -> u64 {
        self.cumulative_tokens
    }

    /// Messages dropped by truncation so far.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter()
    }

    /// Appends a turn, then drops whole messages from the front until the
    /// retained tokens fit the truncation limit.
    pub fn append_and_truncate(&mut self, msg: Message) -> Result<(), FullContextError> {
        if msg.index != self.total_appended {
            return Err(FullContextError::OutOfSequence {
                expected: self.total_appended,
                got: msg.index,
            });
        }
        if let Some(limit) = self.limits.truncation_limit {
            if msg.token_count > limit {
                return Err(FullContextError::MessageTooLarge {
                    tokens: msg.token_count,
                    limit,
                });
            }
        }
        self.cumulative_tokens += msg.token_count;
        self.messages.push_back(msg);
        self.total_appended += 1;
        if let Some(limit) = self.limits.truncation_limit {
            while self.cumulative_tokens > limit {
                let old = self.messages.pop_front().expect("over limit implies non-empty");
                self.cumulative_tokens -= old.token_count;
                self.dropped += 1;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FullContextOutcome {
    Fits(AssembledContext),
    /// The assembled context exceeds the model's hard limit.
    Overflow(AssembledContext),
}

impl FullContextOutcome {
    pub fn context(&self) -> &AssembledContext {
        match self {
            FullContextOutcome::Fits(c) | FullContextOutcome::Overflow(c) => c,
        }
    }

    pub fn is_overflow(&self) -> bool {
        matches!(self, FullContextOutcome::Overflow(_))
    }
}

/// Preamble, every retained message in order, then the query.
pub fn full_context_answer_context(
    history: &FullHistory,
    preamble: &str,
    query: &str,
    counter: &TokenCounter,
) -> Result<FullContextOutcome, FullContextError> {
    let ctx = AssembledContext::build(
        preamble,
        "",
        Vec::new(),
        history.messages.iter().cloned().collect(),
        query,
        counter,
    )?;
    Ok(if ctx.total_tokens > history.limits.hard_model_limit {
        FullContextOutcome::Overflow(ctx)
    } else {
        FullContextOutcome::Fits(ctx)
    })
}
