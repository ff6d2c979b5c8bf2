//! Inference context assembly.
//!
//! All three architectures hand the model an [`AssembledContext`]. Its
//! serialized form is a sequence of segments joined by newlines, always in
//! the same order:
//!
//! ```text
//! <system preamble>
//! KNOWN FACTS:
//! <profile text>
//! RETRIEVED: <chunk text>          (one segment per retrieved chunk)
//! USER: <text> / AGENT: <text>     (one segment per message, oldest first)
//! QUERY: <query>
//! ```
//!
//! Empty parts are omitted. `total_tokens` is the sum of the per-segment
//! counts, so recounting the joined text differs by at most one token per
//! newline boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::message::Message;
use crate::tokens::TokenCounter;

pub const PROFILE_HEADER: &str = "KNOWN FACTS:";
pub const RETRIEVED_LABEL: &str = "RETRIEVED:";
pub const QUERY_LABEL: &str = "QUERY:";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("query must not be empty")]
    EmptyQuery,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledContext {
    pub system_preamble: String,
    pub profile_text: String,
    pub retrieved_chunks: Vec<String>,
    pub episodic_messages: Vec<Message>,
    pub query: String,
    pub total_tokens: u64,
}

impl AssembledContext {
    /// Builds a context from its parts and counts its tokens.
    pub fn build(
        system_preamble: &str,
        profile_text: &str,
        retrieved_chunks: Vec<String>,
        episodic_messages: Vec<Message>,
        query: &str,
        counter: &TokenCounter,
    ) -> Result<Self, ContextError> {
        if query.trim().is_empty() {
            return Err(ContextError::EmptyQuery);
        }
        let mut ctx = Self {
            system_preamble: system_preamble.to_string(),
            profile_text: profile_text.to_string(),
            retrieved_chunks,
            episodic_messages,
            query: query.to_string(),
            total_tokens: 0,
        };
        ctx.total_tokens = ctx.segments().iter().map(|s| counter.count(s) as u64).sum();
        Ok(ctx)
    }

    /// Serialized segments, in presentation order.
    pub fn segments(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.episodic_messages.len() + 4);
        if !self.system_preamble.is_empty() {
            out.push(self.system_preamble.clone());
        }
        out.extend(self.body_segments());
        out
    }

    /// Segments after the preamble: what goes into the user turn of a chat
    /// request.
    pub fn body_segments(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.episodic_messages.len() + 3);
        if !self.profile_text.is_empty() {
            out.push(format!("{PROFILE_HEADER}\n{}", self.profile_text));
        }
        for chunk in &self.retrieved_chunks {
            out.push(format!("{RETRIEVED_LABEL} {chunk}"));
        }
        for m in &self.episodic_messages {
            out.push(m.render());
        }
        out.push(format!("{QUERY_LABEL} {}", self.query));
        out
    }

    pub fn render(&self) -> String {
        self.segments().join("\n")
    }

    pub fn render_body(&self) -> String {
        self.body_segments().join("\n")
    }

    /// Tokens taken by the preamble segment alone.
    pub fn preamble_tokens(&self, counter: &TokenCounter) -> u64 {
        counter.count(&self.system_preamble) as u64
    }

    /// Number of newline boundaries between segments.
    pub fn boundaries(&self) -> usize {
        self.segments().len().saturating_sub(1)
    }
}

/// Dual-process inference input: preamble, consolidated profile, then the
/// episodic window oldest-first, then the query.
pub fn assemble_context(
    system_preamble: &str,
    profile_text: &str,
    window: &[Message],
    query: &str,
    counter: &TokenCounter,
) -> Result<AssembledContext, ContextError> {
    AssembledContext::build(
        system_preamble,
        profile_text,
        Vec::new(),
        window.to_vec(),
        query,
        counter,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{alternating_role, Role};

    fn msgs(n: u64, text: &str) -> Vec<Message> {
        let c = TokenCounter::default();
        (0..n).map(|i| Message::new(i, alternating_role(i), text, &c)).collect()
    }

    #[test]
    fn degenerate_start_has_only_preamble_and_query() {
        let c = TokenCounter::default();
        let ctx = assemble_context("You are a helpful assistant.", "", &[], "q", &c).unwrap();
        assert_eq!(ctx.render(), "You are a helpful assistant.\nQUERY: q");
        assert_eq!(ctx.total_tokens, 7 + 2);
    }

    #[test]
    fn rejects_empty_query() {
        let c = TokenCounter::default();
        assert_eq!(
            assemble_context("", "", &[], "  ", &c),
            Err(ContextError::EmptyQuery)
        );
    }

    #[test]
    fn part_order_is_fixed() {
        let c = TokenCounter::default();
        let window = msgs(3, "hello");
        let ctx = assemble_context("PRE", "FACT a=1;", &window, "what?", &c).unwrap();
        let text = ctx.render();
        let pre = text.find("PRE").unwrap();
        let facts = text.find(PROFILE_HEADER).unwrap();
        let first = text.find("USER: hello").unwrap();
        let q = text.find("QUERY: what?").unwrap();
        assert!(pre < facts && facts < first && first < q);
        let order: Vec<u64> = ctx.episodic_messages.iter().map(|m| m.index).collect();
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn synthetic_footprint_near_180() {
        // 170-token profile and ten one-word turns.
        let c = TokenCounter::default();
        let profile = "x".repeat(170 * 4 - PROFILE_HEADER.len() - 1);
        let window = msgs(10, "ok");
        let ctx = assemble_context("", &profile, &window, "q?", &c).unwrap();
        // Profile segment is exactly 170 tokens; "USER: ok" is 2, "AGENT: ok" is 3.
        assert_eq!(ctx.total_tokens, 170 + 5 * 2 + 5 * 3 + 3);
        assert!((170..=200).contains(&ctx.total_tokens));
    }

    #[test]
    fn large_profile_footprint() {
        let c = TokenCounter::default();
        let profile = "y".repeat(45_434 * 4 - PROFILE_HEADER.len() - 1);
        let window = msgs(10, "a turn of ordinary research chatter about the data");
        let ctx = assemble_context("", &profile, &window, "What now?", &c).unwrap();
        assert!((45_434..=46_500).contains(&ctx.total_tokens), "{}", ctx.total_tokens);
    }

    #[test]
    fn recount_within_boundary_tolerance() {
        let c = TokenCounter::default();
        let window = msgs(7, "some  text with\tspaces");
        let ctx = assemble_context("Preamble here.", "FACT k=v;", &window, "q", &c).unwrap();
        let recount = c.count(&ctx.render()) as i64;
        let diff = (recount - ctx.total_tokens as i64).unsigned_abs() as usize;
        assert!(diff <= ctx.boundaries());
    }

    #[test]
    fn assembly_is_pure() {
        let c = TokenCounter::default();
        let window = msgs(5, "t");
        let a = assemble_context("p", "f", &window, "q", &c).unwrap();
        let b = assemble_context("p", "f", &window, "q", &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.render().as_bytes(), b.render().as_bytes());
    }

    #[test]
    fn system_role_label() {
        assert_eq!(Role::System.label(), "SYSTEM");
    }
}
