//! Conversational turns.

use serde::{Deserialize, Serialize};

use crate::tokens::TokenCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Agent,
    System,
}

impl Role {
    /// Label used when serializing a context ("USER: ...").
    pub fn label(self) -> &'static str {
        match self {
            Role::User => "USER",
            Role::Agent => "AGENT",
            Role::System => "SYSTEM",
        }
    }
}

/// One conversational turn. `token_count` is fixed at ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub index: u64,
    pub role: Role,
    pub text: String,
    pub token_count: u64,
}

impl Message {
    pub fn new(index: u64, role: Role, text: impl Into<String>, counter: &TokenCounter) -> Self {
        let text = text.into();
        let token_count = counter.count(&text) as u64;
        Self {
            index,
            role,
            text,
            token_count,
        }
    }

    /// The line this message occupies in a serialized context.
    pub fn render(&self) -> String {
        format!("{}: {}", self.role.label(), self.text)
    }
}

/// Role of the turn at `index` in an alternating user/agent conversation.
pub fn alternating_role(index: u64) -> Role {
    if index % 2 == 0 {
        Role::User
    } else {
        Role::Agent
    }
}

/// Checks the sequencing invariant of a conversation log: indices start at
/// zero and increase by one.
pub fn is_contiguous(messages: &[Message]) -> bool {
    messages
        .iter()
        .enumerate()
        .all(|(i, m)| m.index == i as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_count_matches_counter() {
        let c = TokenCounter::default();
        let m = Message::new(0, Role::User, "p < 0.001", &c);
        assert_eq!(m.token_count, 3);
        assert_eq!(m.render(), "USER: p < 0.001");
    }

    #[test]
    fn contiguity() {
        let c = TokenCounter::default();
        let log: Vec<_> = (0..4)
            .map(|i| Message::new(i, alternating_role(i), "x", &c))
            .collect();
        assert!(is_contiguous(&log));
        assert!(!is_contiguous(&log[1..]));
    }
}
