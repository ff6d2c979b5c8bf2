//! Answer-quality judges on a 0 to 10 scale.

use std::sync::Arc;

use super::{BackendError, ChatBackend, ChatRequest};
use crate::evaluation::match_answer;
use crate::tokens::TokenCounter;

pub trait Judge: Send + Sync {
    fn score(&self, question: &str, ground_truth: &str, answer: &str) -> Result<f64, BackendError>;
}

pub fn judge_score(
    judge: &dyn Judge,
    question: &str,
    ground_truth: &str,
    answer: &str,
) -> Result<f64, BackendError> {
    let s = judge.score(question, ground_truth, answer)?;
    if !(0.0..=10.0).contains(&s) {
        return Err(BackendError::Parse(format!("judge score {s} outside [0, 10]")));
    }
    Ok(s)
}

/// Stub rubric: 10 for an exact match (ignoring surrounding whitespace), 5
/// when the answer contains the ground truth, 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedJudge;

impl Judge for ScriptedJudge {
    fn score(&self, _question: &str, ground_truth: &str, answer: &str) -> Result<f64, BackendError> {
        let answer = answer.trim();
        if answer.is_empty() {
            return Ok(0.0);
        }
        if answer == ground_truth.trim() {
            return Ok(10.0);
        }
        Ok(if match_answer(ground_truth, answer) { 5.0 } else { 0.0 })
    }
}

/// Asks a chat model to grade an answer and parses the `SCORE:` line.
pub struct LlmJudge {
    backend: Arc<dyn ChatBackend>,
    counter: TokenCounter,
}

const RUBRIC: &str = "You are grading an assistant's answer against a reference answer. \
Score factual agreement with the reference from 0 (wrong or missing) to 10 (fully correct and complete). \
Reply with a single line of the form SCORE: <number>.";

impl LlmJudge {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            backend,
            counter: TokenCounter::default(),
        }
    }
}

/// Extracts the score from judge output: the number after `SCORE:` if
/// present, otherwise the output must be a bare number.
pub fn parse_score(output: &str) -> Result<f64, BackendError> {
    let upper = output.to_uppercase();
    let tail = match upper.rfind("SCORE:") {
        Some(i) => output[i + "SCORE:".len()..].trim(),
        None => output.trim(),
    };
    let token: String = tail
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    let rest = tail[token.len()..].trim_start_matches(['/', ' ']);
    let bare_ok = upper.contains("SCORE:") || rest.is_empty() || rest == "10";
    match token.parse::<f64>() {
        Ok(v) if bare_ok && (0.0..=10.0).contains(&v) => Ok(v),
        _ => Err(BackendError::Parse(format!("unparseable judge output {output:?}"))),
    }
}

impl Judge for LlmJudge {
    fn score(&self, question: &str, ground_truth: &str, answer: &str) -> Result<f64, BackendError> {
        let user = format!("QUESTION: {question}\nREFERENCE: {ground_truth}\nANSWER: {answer}");
        let input_tokens = (self.counter.count(RUBRIC) + self.counter.count(&user)) as u64;
        let out = self.backend.complete(&ChatRequest {
            system: RUBRIC.to_string(),
            user,
            input_tokens,
            temperature: 0.0,
            max_output_tokens: 16,
        });
        parse_score(&out.result?)
    }
}
