//! Dense research-conversation streams drawn from a communicative-act mix.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::{directive_text, key_name, log_text, noise_text, topic_value, update_text, TOPICS};
use super::queries::question;
use super::{ContradictionSchedule, GenerationError, QueryCase, QueryType, WorkloadSpec};
use crate::facts::{render_marker, FactTable};
use crate::message::{alternating_role, Message};
use crate::tokens::TokenCounter;

pub const REALISTIC_SCALES: [u64; 10] = [100, 500, 1_000, 2_000, 4_000, 6_000, 7_500, 10_000, 12_500, 15_000];

pub const THRESHOLD_KEY: &str = "p_threshold";
pub const THRESHOLD_VALUES: [&str; 3] = ["0.05", "0.01", "0.001"];
pub const DATASET_KEY: &str = "dataset";
pub const DATASET_VALUE: &str = "TCGA-PAAD 178 samples";

/// No key is asserted more than this many times.
const MAX_VALUES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Act {
    Directive,
    StateUpdate,
    Log,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealisticRun {
    pub messages: Vec<Message>,
    pub cases: Vec<QueryCase>,
    pub schedules: Vec<ContradictionSchedule>,
    /// Messages per act: directive, state update, experimental log, noise.
    pub tally: [usize; 4],
}

fn threshold_indices(len: u64) -> [u64; 3] {
    [len / 10, len / 2, len * 9 / 10]
}

struct Key {
    name: String,
    topic: usize,
    values: usize,
}

pub fn generate_realistic_run(spec: &WorkloadSpec, counter: &TokenCounter) -> Result<RealisticRun, GenerationError> {
    spec.validate()?;
    let len = spec.total_messages;
    if len < 10 {
        return Err(GenerationError::TooShort(format!("{len} messages, need at least 10")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mix = &spec.act_mix;
    let thresholds = threshold_indices(len);
    let mut keys: Vec<Key> = Vec::new();
    let mut tally = [0usize; 4];
    let mut messages = Vec::with_capacity(len as usize);

    for i in 0..len {
        let text = if i == 0 {
            tally[0] += 1;
            format!(
                "Project kickoff: the {} is {}",
                TOPICS[3].1,
                render_marker(DATASET_KEY, DATASET_VALUE)
            )
        } else if let Some(j) = thresholds.iter().position(|&t| t == i) {
            let marker = render_marker(THRESHOLD_KEY, THRESHOLD_VALUES[j]);
            if j == 0 {
                tally[0] += 1;
                format!("Let's use this significance cutoff for all tests: {marker}")
            } else {
                tally[1] += 1;
                format!("Tightening the significance cutoff after review: {marker}")
            }
        } else {
            let roll: f64 = rng.random();
            let mut act = if roll < mix.directive {
                Act::Directive
            } else if roll < mix.directive + mix.state_update {
                Act::StateUpdate
            } else if roll < mix.directive + mix.state_update + mix.experimental_log {
                Act::Log
            } else {
                Act::Noise
            };
            let open: Vec<usize> = (0..keys.len()).filter(|&k| keys[k].values < MAX_VALUES).collect();
            if act == Act::StateUpdate && open.is_empty() {
                act = Act::Directive;
            }
            match act {
                Act::Directive => {
                    tally[0] += 1;
                    let topic = rng.random_range(0..TOPICS.len());
                    let name = key_name(topic, keys.len() + 1);
                    let value = topic_value(&mut rng, topic);
                    keys.push(Key { name, topic, values: 1 });
                    let k = keys.last().expect("just pushed");
                    directive_text(&mut rng, topic, &k.name, &value)
                }
                Act::StateUpdate => {
                    tally[1] += 1;
                    let k = &mut keys[*open.choose(&mut rng).expect("non-empty")];
                    k.values += 1;
                    let value = topic_value(&mut rng, k.topic);
                    update_text(&mut rng, k.topic, &k.name, &value)
                }
                Act::Log => {
                    tally[2] += 1;
                    log_text(&mut rng)
                }
                Act::Noise => {
                    tally[3] += 1;
                    noise_text(&mut rng)
                }
            }
        };
        messages.push(Message::new(i, alternating_role(i), text, counter));
    }

    let table = FactTable::from_messages(&messages);
    let schedules: Vec<ContradictionSchedule> = table
        .keys()
        .iter()
        .filter(|k| table.history(k).len() >= 2)
        .map(|k| {
            let h = table.history(k);
            ContradictionSchedule {
                key: k.clone(),
                values: h.iter().map(|(v, _)| v.clone()).collect(),
                indices: h.iter().map(|(_, i)| *i).collect(),
            }
        })
        .collect();
    let cases = realistic_probes(&table, len, &mut rng)?;
    Ok(RealisticRun {
        messages,
        cases,
        schedules,
        tally,
    })
}

/// The four probes per seed: the threshold's current value, the initial
/// value of an evolving key, an early single-assertion key, and the dataset
/// joined with the threshold.
fn realistic_probes(table: &FactTable, len: u64, rng: &mut ChaCha8Rng) -> Result<Vec<QueryCase>, GenerationError> {
    let evolving: Vec<&String> = table
        .keys()
        .iter()
        .filter(|k| *k != THRESHOLD_KEY && table.values(k).len() >= 2)
        .collect();
    let early: Vec<&String> = table
        .keys()
        .iter()
        .filter(|k| {
            let h = table.history(k);
            *k != DATASET_KEY && h.len() == 1 && h[0].1 < len / 5
        })
        .collect();
    let threshold = THRESHOLD_KEY.to_string();
    let historical = evolving.choose(rng).map_or(threshold.clone(), |k| (*k).clone());
    let long_term = early.choose(rng).map_or(DATASET_KEY.to_string(), |k| (*k).clone());
    let plan = [
        (QueryType::RecentState, vec![threshold.clone()]),
        (QueryType::HistoricalRetrieval, vec![historical]),
        (QueryType::LongTerm, vec![long_term]),
        (QueryType::MultiHop, vec![DATASET_KEY.to_string(), threshold]),
    ];
    plan.into_iter()
        .map(|(query_type, keys)| {
            let question = question(query_type, &keys, "project");
            let expected_parts = query_type
                .expected_from(&keys, table)
                .ok_or_else(|| GenerationError::Unanswerable {
                    question: question.clone(),
                })?;
            let supporting_indices = keys
                .iter()
                .flat_map(|k| table.history(k).iter().map(|(_, i)| *i))
                .collect();
            let unique = keys.iter().all(|k| table.history(k).len() == 1);
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
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(len: u64, seed: u64) -> RealisticRun {
        generate_realistic_run(&WorkloadSpec::realistic(len, seed), &TokenCounter::default()).unwrap()
    }

    #[test]
    fn tally_tracks_the_mix_at_one_hundred() {
        // Binomial(100, p) within four standard deviations.
        for seed in 0..20 {
            let r = run(100, seed);
            assert_eq!(r.tally.iter().sum::<usize>(), 100);
            for (count, p) in r.tally.iter().zip([0.20f64, 0.15, 0.25, 0.40]) {
                let sd = (100.0 * p * (1.0 - p)).sqrt();
                assert!((*count as f64 - 100.0 * p).abs() <= 4.0 * sd, "seed {seed}: {:?}", r.tally);
            }
        }
    }

    #[test]
    fn recent_state_probe_is_final_threshold() {
        let r = run(1_000, 7);
        let rs = &r.cases[0];
        assert_eq!(rs.query_type, QueryType::RecentState);
        assert_eq!(rs.expected_parts, vec!["0.001".to_string()]);
        let s = r.schedules.iter().find(|s| s.key == THRESHOLD_KEY).unwrap();
        assert_eq!(s.values, THRESHOLD_VALUES.map(String::from).to_vec());
        assert!(s.is_valid(1_000));
        assert!(r.schedules.iter().all(|s| s.is_valid(1_000) && s.values.len() <= MAX_VALUES));
    }

    #[test]
    fn four_answerable_probes() {
        for len in [100, 2_000] {
            let r = run(len, 3);
            assert_eq!(r.cases.len(), 4);
            let table = FactTable::from_messages(&r.messages);
            for c in &r.cases {
                c.verify(&table).unwrap();
            }
            let mh = &r.cases[3];
            assert!(mh.expected_parts.iter().any(|p| p.contains("178")));
            assert!(mh.expected_parts.iter().any(|p| p == "0.001"));
        }
    }

    #[test]
    fn density_near_thirteen_tokens() {
        for seed in 0..3 {
            let r = run(5_000, seed);
            let mean = r.messages.iter().map(|m| m.token_count).sum::<u64>() as f64 / 5_000.0;
            assert!((12.0..=15.0).contains(&mean), "{mean}");
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(run(300, 11), run(300, 11));
        assert_ne!(run(300, 11).messages, run(300, 12).messages);
    }
}
