//! The six-type query suite and the log it is asked over.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::{directive_text, key_name, log_text, noise_text, topic_value, update_text, TOPICS};
use super::{GenerationError, QueryCase, QueryType};
use crate::backends::probe_tag;
use crate::facts::FactTable;
use crate::message::{alternating_role, Message};
use crate::tokens::TokenCounter;

pub const HONEST_CASES_PER_TYPE: usize = 20;

const HONEST_MESSAGES: u64 = 1_000;
const EVOLVING_KEYS: usize = 20;
const STATIC_KEYS: usize = 50;
/// Early statics land in the first fifth of the log.
const EARLY_FRACTION: u64 = 5;
/// Minimum distance between successive values of one key.
const VALUE_GAP: u64 = 80;

/// Natural-language question for a case, ending in the probe tag.
pub fn question(query_type: QueryType, keys: &[String], subject: &str) -> String {
    let k0 = keys.first().map_or("", String::as_str);
    let k1 = keys.get(1).map_or("", String::as_str);
    let body = match query_type {
        QueryType::RecentState => format!("What is the current value of {k0}?"),
        QueryType::HistoricalRetrieval => format!("What was the initial value of {k0}, before any revision?"),
        QueryType::Contradictory => format!("Which two conflicting values were given most recently for {k0}?"),
        QueryType::TemporalSequence => format!("List every value {k0} has taken, in order."),
        QueryType::MultiHop => format!("Combining {k0} and {k1}, what are both values?"),
        QueryType::LongTerm => format!("Early on we set {k0} for the {subject}. What was it?"),
    };
    let refs: Vec<&str> = keys.iter().map(String::as_str).collect();
    format!("{body} {}", probe_tag(&refs))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HonestRun {
    pub messages: Vec<Message>,
    pub cases: Vec<QueryCase>,
}

fn case(query_type: QueryType, keys: Vec<String>, table: &FactTable, unique: bool) -> Result<QueryCase, GenerationError> {
    let question = question(query_type, &keys, "project");
    let expected_parts = query_type
        .expected_from(&keys, table)
        .ok_or_else(|| GenerationError::Unanswerable {
            question: question.clone(),
        })?;
    let mut supporting_indices: Vec<u64> = keys
        .iter()
        .flat_map(|k| table.history(k).iter().map(|(_, i)| *i))
        .collect();
    supporting_indices.sort_unstable();
    let case = QueryCase {
        query_type,
        question,
        expected_parts,
        keys,
        supporting_indices,
        unique,
    };
    case.verify(table)?;
    Ok(case)
}

/// Builds `per_type` cases of each type from the facts asserted in `log`.
///
/// Keys asserted more than once feed recent_state, contradictory,
/// temporal_sequence, the first half of historical_retrieval, and the second
/// hop of multi_hop. Keys asserted once, in order of assertion, feed
/// long_term, then the first hop of multi_hop, then the unique half of
/// historical_retrieval.
pub fn generate_query_suite(log: &[Message], per_type: usize) -> Result<Vec<QueryCase>, GenerationError> {
    let table = FactTable::from_messages(log);
    let (evolving, statics): (Vec<&String>, Vec<&String>) =
        table.keys().iter().partition(|k| table.values(k).len() >= 2);
    let unique_half = per_type / 2;
    if evolving.len() < per_type {
        return Err(GenerationError::TooShort(format!(
            "{} evolving keys, need {per_type}",
            evolving.len()
        )));
    }
    if statics.len() < 2 * per_type + unique_half {
        return Err(GenerationError::TooShort(format!(
            "{} single-assertion keys, need {}",
            statics.len(),
            2 * per_type + unique_half
        )));
    }
    let one = |k: &String| vec![k.clone()];
    let mut cases = Vec::with_capacity(per_type * QueryType::ALL.len());
    for k in &evolving[..per_type] {
        cases.push(case(QueryType::RecentState, one(k), &table, false)?);
    }
    for k in &evolving[..per_type - unique_half] {
        cases.push(case(QueryType::HistoricalRetrieval, one(k), &table, false)?);
    }
    for k in &statics[2 * per_type..2 * per_type + unique_half] {
        cases.push(case(QueryType::HistoricalRetrieval, one(k), &table, true)?);
    }
    for k in &evolving[..per_type] {
        cases.push(case(QueryType::Contradictory, one(k), &table, false)?);
    }
    for k in &evolving[..per_type] {
        cases.push(case(QueryType::TemporalSequence, one(k), &table, false)?);
    }
    for (s, e) in statics[per_type..2 * per_type].iter().zip(&evolving[..per_type]) {
        cases.push(case(QueryType::MultiHop, vec![(*s).clone(), (*e).clone()], &table, false)?);
    }
    for k in &statics[..per_type] {
        cases.push(case(QueryType::LongTerm, one(k), &table, true)?);
    }
    Ok(cases)
}

fn free_slot(rng: &mut ChaCha8Rng, lo: u64, hi: u64, taken: &[Option<String>]) -> u64 {
    loop {
        let i = rng.random_range(lo..hi);
        if taken[i as usize].is_none() {
            return i;
        }
    }
}

/// A 1,000-message log of logs and chatter carrying 20 evolving keys (two or
/// three values each, spread across the log) and 50 keys asserted once, 20
/// of them early, plus its 120-case suite.
pub fn generate_honest_run(seed: u64, counter: &TokenCounter) -> Result<HonestRun, GenerationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = HONEST_MESSAGES;
    let mut slots: Vec<Option<String>> = vec![None; len as usize];
    let mut serial = 0usize;
    let next_topic = |serial: &mut usize| {
        let t = *serial % TOPICS.len();
        *serial += 1;
        (t, key_name(t, *serial))
    };

    // Statics first in assertion order: the early block, then the rest.
    for s in 0..STATIC_KEYS {
        let (topic, key) = next_topic(&mut serial);
        let value = topic_value(&mut rng, topic);
        let (lo, hi) = if s < HONEST_CASES_PER_TYPE {
            (0, len / EARLY_FRACTION)
        } else {
            (len / EARLY_FRACTION, len)
        };
        let at = free_slot(&mut rng, lo, hi, &slots);
        slots[at as usize] = Some(directive_text(&mut rng, topic, &key, &value));
    }
    for _ in 0..EVOLVING_KEYS {
        let (topic, key) = next_topic(&mut serial);
        let count = rng.random_range(2..=3u64);
        let segment = len / count;
        let mut used = Vec::new();
        for j in 0..count {
            let mut value = topic_value(&mut rng, topic);
            while used.contains(&value) {
                value = topic_value(&mut rng, topic);
            }
            let lo = j * segment + VALUE_GAP / 2;
            let hi = (j + 1) * segment - VALUE_GAP / 2;
            let at = free_slot(&mut rng, lo, hi, &slots);
            slots[at as usize] = Some(if j == 0 {
                directive_text(&mut rng, topic, &key, &value)
            } else {
                update_text(&mut rng, topic, &key, &value)
            });
            used.push(value);
        }
    }

    let messages: Vec<Message> = slots
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            let text = slot.unwrap_or_else(|| {
                if rng.random_bool(0.5) {
                    log_text(&mut rng)
                } else {
                    noise_text(&mut rng)
                }
            });
            Message::new(i as u64, alternating_role(i as u64), text, counter)
        })
        .collect();
    let cases = generate_query_suite(&messages, HONEST_CASES_PER_TYPE)?;
    Ok(HonestRun { messages, cases })
}
