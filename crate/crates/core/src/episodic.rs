//! Episodic buffer: the last `W` turns, verbatim.

use std::collections::VecDeque;

use thiserror::Error;

use crate::message::{Message, Role};

pub const DEFAULT_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BufferError {
    #[error("window capacity must be positive")]
    ZeroCapacity,
    #[error("out-of-sequence message: expected index {expected}, got {got}")]
    OutOfSequence { expected: u64, got: u64 },
    #[error("system messages are not part of the episodic window")]
    SystemMessage,
}

/// Fixed-capacity FIFO over the most recent turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodicBuffer {
    capacity: usize,
    entries: VecDeque<Message>,
    total_appended: u64,
}

impl EpisodicBuffer {
    pub fn new(capacity: usize) -> Result<Self, BufferError> {
        if capacity == 0 {
            return Err(BufferError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            total_appended: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total_appended(&self) -> u64 {
        self.total_appended
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends the next turn, evicting the oldest when full.
    ///
    /// Turns must arrive with `index == total_appended`.
    pub fn append(&mut self, msg: Message) -> Result<(), BufferError> {
        if msg.role == Role::System {
            return Err(BufferError::SystemMessage);
        }
        if msg.index != self.total_appended {
            return Err(BufferError::OutOfSequence {
                expected: self.total_appended,
                got: msg.index,
            });
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(msg);
        self.total_appended += 1;
        Ok(())
    }

    /// Snapshot of the window, oldest first.
    pub fn window(&self) -> Vec<Message> {
        self.entries.iter().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Message> {
        self.entries.iter()
    }

    pub fn window_tokens(&self) -> u64 {
        self.entries.iter().map(|m| m.token_count).sum()
    }
}

impl Default for EpisodicBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW).expect("default window is positive")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::alternating_role;
    use crate::tokens::TokenCounter;
    use proptest::prelude::*;

    fn msg(i: u64) -> Message {
        Message::new(i, alternating_role(i), format!("turn {i}"), &TokenCounter::default())
    }

    fn indices(b: &EpisodicBuffer) -> Vec<u64> {
        b.window().iter().map(|m| m.index).collect()
    }

    #[test]
    fn fills_to_capacity() {
        let mut b = EpisodicBuffer::new(10).unwrap();
        for i in 0..10 {
            b.append(msg(i)).unwrap();
        }
        assert_eq!(indices(&b), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn evicts_oldest() {
        let mut b = EpisodicBuffer::new(10).unwrap();
        for i in 0..15 {
            b.append(msg(i)).unwrap();
        }
        assert_eq!(indices(&b), (5..15).collect::<Vec<_>>());
        assert_eq!(b.total_appended(), 15);
    }

    #[test]
    fn capacity_one() {
        let mut b = EpisodicBuffer::new(1).unwrap();
        for i in 0..3 {
            b.append(msg(i)).unwrap();
        }
        assert_eq!(indices(&b), vec![2]);
    }

    #[test]
    fn empty_and_under_capacity() {
        let mut b = EpisodicBuffer::default();
        assert!(b.window().is_empty());
        for i in 0..3 {
            b.append(msg(i)).unwrap();
        }
        assert_eq!(indices(&b), vec![0, 1, 2]);
    }

    #[test]
    fn ten_thousand_appends() {
        let mut b = EpisodicBuffer::new(10).unwrap();
        for i in 0..10_000 {
            b.append(msg(i)).unwrap();
        }
        assert_eq!(indices(&b), (9_990..10_000).collect::<Vec<_>>());
    }

    #[test]
    fn snapshots_are_detached() {
        let mut b = EpisodicBuffer::new(2).unwrap();
        b.append(msg(0)).unwrap();
        let snap = b.window();
        b.append(msg(1)).unwrap();
        b.append(msg(2)).unwrap();
        assert_eq!(snap.len(), 1);
        assert_eq!(snap[0].index, 0);
    }

    #[test]
    fn rejects_out_of_sequence_and_system() {
        let mut b = EpisodicBuffer::new(3).unwrap();
        assert_eq!(
            b.append(msg(1)),
            Err(BufferError::OutOfSequence { expected: 0, got: 1 })
        );
        let sys = Message::new(0, Role::System, "sys", &TokenCounter::default());
        assert_eq!(b.append(sys), Err(BufferError::SystemMessage));
        assert_eq!(EpisodicBuffer::new(0), Err(BufferError::ZeroCapacity));
    }

    proptest! {
        #[test]
        fn window_is_suffix_of_log(t in 0u64..3000, w in 1usize..60) {
            let mut b = EpisodicBuffer::new(w).unwrap();
            let mut log = Vec::new();
            for i in 0..t {
                let m = msg(i);
                log.push(m.clone());
                b.append(m).unwrap();
            }
            let keep = (t as usize).min(w);
            prop_assert_eq!(b.window(), log[log.len() - keep..].to_vec());
            let max_tokens = log.iter().map(|m| m.token_count).max().unwrap_or(0);
            prop_assert!(b.window_tokens() <= w as u64 * max_tokens);
        }
    }
}
