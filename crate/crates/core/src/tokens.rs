//! Deterministic token counting.
//!
//! The default counter is a character heuristic: whitespace runs collapse to a
//! single character and the collapsed length is divided by a fixed
//! characters-per-token ratio, rounding up. It approximates commercial BPE
//! tokenizers closely enough for budgeting and keeps every count reproducible.
//! An external counter can be plugged in when exact counts matter.

use std::fmt;
use std::sync::Arc;

/// Default characters-per-token divisor of the heuristic counter.
pub const DEFAULT_CHARS_PER_TOKEN: usize = 4;

type ExternalFn = dyn Fn(&str) -> usize + Send + Sync;

#[derive(Clone)]
pub enum CounterMode {
    Heuristic { chars_per_token: usize },
    External(Arc<ExternalFn>),
}

/// Token counter shared by every component that reports token usage.
#[derive(Clone)]
pub struct TokenCounter {
    mode: CounterMode,
}

impl TokenCounter {
    /// Heuristic counter with the given divisor (clamped to at least 1).
    pub fn heuristic(chars_per_token: usize) -> Self {
        Self {
            mode: CounterMode::Heuristic {
                chars_per_token: chars_per_token.max(1),
            },
        }
    }

    /// Wraps an exact tokenizer supplied by the caller.
    pub fn external<F>(count: F) -> Self
    where
        F: Fn(&str) -> usize + Send + Sync + 'static,
    {
        Self {
            mode: CounterMode::External(Arc::new(count)),
        }
    }

    pub fn mode(&self) -> &CounterMode {
        &self.mode
    }

    /// Divisor used for token-positioned text splitting. External counters
    /// fall back to the default ratio.
    pub fn chars_per_token(&self) -> usize {
        match self.mode {
            CounterMode::Heuristic { chars_per_token } => chars_per_token,
            CounterMode::External(_) => DEFAULT_CHARS_PER_TOKEN,
        }
    }

    pub fn count(&self, text: &str) -> usize {
        match &self.mode {
            CounterMode::Heuristic { chars_per_token } => {
                collapsed_len(text).div_ceil(*chars_per_token)
            }
            CounterMode::External(f) => f(text),
        }
    }
}

impl Default for TokenCounter {
    fn default() -> Self {
        Self::heuristic(DEFAULT_CHARS_PER_TOKEN)
    }
}

impl fmt::Debug for TokenCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.mode {
            CounterMode::Heuristic { chars_per_token } => f
                .debug_struct("TokenCounter")
                .field("chars_per_token", chars_per_token)
                .finish(),
            CounterMode::External(_) => f.write_str("TokenCounter(external)"),
        }
    }
}

/// Free-function form of [`TokenCounter::count`].
pub fn count_tokens(text: &str, counter: &TokenCounter) -> usize {
    counter.count(text)
}

/// Number of characters after collapsing each whitespace run to one character.
pub fn collapsed_len(text: &str) -> usize {
    let mut n = 0;
    let mut in_ws = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_ws {
                n += 1;
                in_ws = true;
            }
        } else {
            n += 1;
            in_ws = false;
        }
    }
    n
}

/// Byte offset of every collapsed character, followed by `text.len()`.
///
/// A whitespace run maps to one collapsed character starting at the first
/// byte of the run, so slicing between two returned offsets never splits a
/// run and the collapsed length of `text[starts[a]..starts[b]]` is `b - a`.
pub fn collapsed_char_starts(text: &str) -> Vec<usize> {
    let mut starts = Vec::with_capacity(text.len() + 1);
    let mut in_ws = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if !in_ws {
                starts.push(i);
                in_ws = true;
            }
        } else {
            starts.push(i);
            in_ws = false;
        }
    }
    starts.push(text.len());
    starts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_zero() {
        assert_eq!(count_tokens("", &TokenCounter::default()), 0);
    }

    #[test]
    fn four_hundred_chars_is_one_hundred_tokens() {
        // 80 words of 4 letters separated by single spaces, plus one trailing
        // word of 4 letters: 80*5 = 400 characters.
        let text = "abcd ".repeat(79) + "abcde";
        assert_eq!(text.chars().count(), 400);
        assert_eq!(count_tokens(&text, &TokenCounter::default()), 100);
    }

    #[test]
    fn p_value_rounds_up() {
        assert_eq!(count_tokens("p < 0.001", &TokenCounter::default()), 3);
    }

    #[test]
    fn whitespace_runs_collapse() {
        let c = TokenCounter::default();
        assert_eq!(c.count("ab  \n\t cd"), c.count("ab cd"));
        assert_eq!(collapsed_len("  "), 1);
    }

    #[test]
    fn external_counter_is_used() {
        let c = TokenCounter::external(|s| s.split_whitespace().count());
        assert_eq!(c.count("one two three"), 3);
        assert_eq!(c.chars_per_token(), DEFAULT_CHARS_PER_TOKEN);
    }

    #[test]
    fn starts_slice_has_exact_collapsed_len() {
        let text = "ab  c\n\nd é f";
        let starts = collapsed_char_starts(text);
        assert_eq!(starts.len(), collapsed_len(text) + 1);
        for a in 0..starts.len() {
            for b in a..starts.len() {
                assert_eq!(collapsed_len(&text[starts[a]..starts[b]]), b - a);
            }
        }
    }

    proptest! {
        #[test]
        fn counting_is_deterministic(s in "\\PC{0,200}") {
            let c = TokenCounter::default();
            prop_assert_eq!(c.count(&s), c.count(&s.clone()));
        }

        #[test]
        fn concatenation_never_inflates(a in "[a-z \\n]{0,80}", b in "[a-z \\n]{0,80}") {
            let c = TokenCounter::default();
            let joined = format!("{a}{b}");
            prop_assert!(c.count(&joined) <= c.count(&a) + c.count(&b) + 1);
        }
    }
}
