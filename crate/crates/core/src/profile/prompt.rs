//! Consolidation prompt construction.

use thiserror::Error;

use super::SemanticProfile;
use crate::message::Message;

/// Instruction block sent ahead of every consolidation request.
pub const DEFAULT_TEMPLATE: &str = "You are maintaining a scientific research profile.
Extract:
- Project goals and hypotheses
- Analysis parameters (thresholds, cutoffs)
- Dataset specifications
- Preferences (visualization, methods)

If the new message contradicts existing facts,
UPDATE the profile with the most recent value.
Preserve technical precision.";

/// Phrases a template must contain to be accepted.
pub const REQUIRED_DIRECTIVES: [&str; 6] = [
    "Project goals and hypotheses",
    "Analysis parameters",
    "Dataset specifications",
    "Preferences",
    "UPDATE the profile with the most recent value",
    "Preserve technical precision",
];

pub const EXISTING_PROFILE_HEADER: &str = "EXISTING PROFILE:";
pub const RECENT_MESSAGES_HEADER: &str = "RECENT MESSAGES:";
pub const LATEST_EXCHANGE_HEADER: &str = "LATEST EXCHANGE:";
const CLOSING: &str = "Return the complete updated profile.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("prompt template is missing the directive {0:?}")]
    MissingDirective(&'static str),
    #[error("latest exchange must hold one or two consecutive messages")]
    BadExchange,
    #[error("latest exchange is not the newest part of the request")]
    StaleExchange,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsolidationRequest {
    pub episodic_snapshot: Vec<Message>,
    pub prior_profile: SemanticProfile,
    pub latest_exchange: Vec<Message>,
    pub prompt_template: String,
}

impl ConsolidationRequest {
    pub fn validate(&self) -> Result<(), PromptError> {
        for d in REQUIRED_DIRECTIVES {
            if !self.prompt_template.contains(d) {
                return Err(PromptError::MissingDirective(d));
            }
        }
        let ex = &self.latest_exchange;
        if ex.is_empty() || ex.len() > 2 || (ex.len() == 2 && ex[1].index != ex[0].index + 1) {
            return Err(PromptError::BadExchange);
        }
        let newest = ex[ex.len() - 1].index;
        if self.episodic_snapshot.iter().any(|m| m.index > newest) {
            return Err(PromptError::StaleExchange);
        }
        Ok(())
    }

    /// Highest message index covered by this request.
    pub fn through_index(&self) -> u64 {
        self.latest_exchange.last().map_or(0, |m| m.index)
    }

    /// Snapshot and exchange merged, deduplicated, in index order.
    pub fn messages_in_scope(&self) -> Vec<&Message> {
        let mut all: Vec<&Message> = self
            .episodic_snapshot
            .iter()
            .chain(self.latest_exchange.iter())
            .collect();
        all.sort_by_key(|m| m.index);
        all.dedup_by_key(|m| m.index);
        all
    }
}

/// Renders the consolidation prompt: instruction block, prior profile (when
/// there is one), the episodic snapshot, then the latest exchange.
pub fn build_consolidation_prompt(req: &ConsolidationRequest) -> Result<String, PromptError> {
    req.validate()?;
    let mut out = String::with_capacity(
        req.prompt_template.len()
            + req.prior_profile.text.len()
            + req
                .episodic_snapshot
                .iter()
                .chain(&req.latest_exchange)
                .map(|m| m.text.len() + 8)
                .sum::<usize>()
            + 128,
    );
    out.push_str(&req.prompt_template);
    if !req.prior_profile.text.is_empty() {
        out.push_str("\n\n");
        out.push_str(EXISTING_PROFILE_HEADER);
        out.push('\n');
        out.push_str(&req.prior_profile.text);
    }
    if !req.episodic_snapshot.is_empty() {
        out.push_str("\n\n");
        out.push_str(RECENT_MESSAGES_HEADER);
        for m in &req.episodic_snapshot {
            out.push('\n');
            out.push_str(&m.render());
        }
    }
    out.push_str("\n\n");
    out.push_str(LATEST_EXCHANGE_HEADER);
    for m in &req.latest_exchange {
        out.push('\n');
        out.push_str(&m.render());
    }
    out.push_str("\n\n");
    out.push_str(CLOSING);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::alternating_role;
    use crate::tokens::TokenCounter;

    fn msg(i: u64, text: &str) -> Message {
        Message::new(i, alternating_role(i), text, &TokenCounter::default())
    }

    fn request(prior: &str, snapshot: Vec<Message>, exchange: Vec<Message>) -> ConsolidationRequest {
        ConsolidationRequest {
            episodic_snapshot: snapshot,
            prior_profile: SemanticProfile {
                text: prior.into(),
                ..SemanticProfile::default()
            },
            latest_exchange: exchange,
            prompt_template: DEFAULT_TEMPLATE.into(),
        }
    }

    #[test]
    fn first_consolidation_has_no_profile_section() {
        let req = request("", vec![], vec![msg(0, "hello"), msg(1, "hi there")]);
        let p = build_consolidation_prompt(&req).unwrap();
        assert!(p.starts_with(DEFAULT_TEMPLATE));
        assert!(!p.contains(EXISTING_PROFILE_HEADER));
        assert!(p.contains("USER: hello\nAGENT: hi there"));
    }

    #[test]
    fn prior_and_new_values_both_present() {
        let req = request(
            "threshold p<0.05",
            vec![],
            vec![msg(4, "switch to p<0.01 please"), msg(5, "done")],
        );
        let p = build_consolidation_prompt(&req).unwrap();
        assert!(p.contains("p<0.05") && p.contains("p<0.01"));
        assert!(p.find(EXISTING_PROFILE_HEADER).unwrap() < p.find(LATEST_EXCHANGE_HEADER).unwrap());
    }

    #[test]
    fn snapshot_messages_in_order() {
        let snapshot: Vec<Message> = (0..10).map(|i| msg(i, &format!("turn number {i}"))).collect();
        let exchange = snapshot[8..].to_vec();
        let p = build_consolidation_prompt(&request("x", snapshot, exchange)).unwrap();
        let recent = p.find(RECENT_MESSAGES_HEADER).unwrap();
        let mut last = recent;
        for i in 0..10 {
            let at = p[recent..].find(&format!("turn number {i}\n")).unwrap() + recent;
            assert!(at > last);
            last = at;
        }
        assert!(p.find(RECENT_MESSAGES_HEADER).unwrap() < p.find(LATEST_EXCHANGE_HEADER).unwrap());
    }

    #[test]
    fn rejects_incomplete_template_and_bad_exchange() {
        let mut req = request("", vec![], vec![msg(0, "a"), msg(1, "b")]);
        req.prompt_template = "Summarize.".into();
        assert!(matches!(
            build_consolidation_prompt(&req),
            Err(PromptError::MissingDirective(_))
        ));
        let req = request("", vec![], vec![]);
        assert_eq!(build_consolidation_prompt(&req), Err(PromptError::BadExchange));
        let req = request("", vec![msg(7, "late")], vec![msg(4, "a"), msg(5, "b")]);
        assert_eq!(build_consolidation_prompt(&req), Err(PromptError::StaleExchange));
    }
}
