//! Needle-in-filler capacity runs and the fixed-size growth workload.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::{filler_chars, filler_text, noise_text};
use super::queries::question;
use super::{FactSpec, GenerationError, Placement, QueryCase, QueryType};
use crate::facts::render_marker;
use crate::message::{alternating_role, Message};
use crate::tokens::TokenCounter;

pub const CAPACITY_SCALES: [u64; 6] = [10, 1_000, 10_000, 30_000, 50_000, 100_000];

/// Edge bands never hold more than this many indices.
const MAX_EDGE_BAND: u64 = 10;

const CARRIER_LEAD: &str = "Please remember this for the project record:";

/// Admissible fact indices for a placement in a run of `len` messages.
pub fn placement_band(len: u64, placement: Placement) -> Result<Range<u64>, GenerationError> {
    if len == 0 {
        return Err(GenerationError::EmptyRun);
    }
    let edge = (len / 20).clamp(1, MAX_EDGE_BAND);
    Ok(match placement {
        Placement::Beginning => 0..edge,
        Placement::End => len - edge..len,
        Placement::Middle => {
            let lo = len * 45 / 100;
            let hi = (len * 55).div_ceil(100).max(lo + 1);
            lo..hi.min(len)
        }
        Placement::Index(i) if i < len => i..i + 1,
        Placement::Index(index) => return Err(GenerationError::IndexOutOfRange { index, len }),
    })
}

pub fn resolve_placement(len: u64, placement: Placement, rng: &mut ChaCha8Rng) -> Result<u64, GenerationError> {
    let band = placement_band(len, placement)?;
    Ok(rng.random_range(band))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityRun {
    pub messages: Vec<Message>,
    pub fact: FactSpec,
    pub fact_index: u64,
    pub case: QueryCase,
}

/// `len` filler messages of exactly `filler_tokens` tokens each, with the
/// fact's carrier at its resolved placement. The carrier is padded to the
/// same size when the marker fits.
pub fn generate_capacity_run(
    len: u64,
    fact: &FactSpec,
    seed: u64,
    filler_tokens: usize,
    counter: &TokenCounter,
) -> Result<CapacityRun, GenerationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fact_index = resolve_placement(len, fact.placement, &mut rng)?;
    let width = filler_tokens * counter.chars_per_token();
    let messages = (0..len)
        .map(|i| {
            let text = if i == fact_index {
                let head = format!("{CARRIER_LEAD} {}", render_marker(&fact.key, &fact.value));
                if head.len() + 1 < width {
                    format!("{head} {}", filler_chars(&mut rng, width - head.len() - 1))
                } else {
                    head
                }
            } else {
                filler_text(&mut rng, filler_tokens)
            };
            Message::new(i, alternating_role(i), text, counter)
        })
        .collect();
    let keys = vec![fact.key.clone()];
    let case = QueryCase {
        query_type: QueryType::LongTerm,
        question: question(QueryType::LongTerm, &keys, "project record"),
        expected_parts: vec![fact.value.clone()],
        keys,
        supporting_indices: vec![fact_index],
        unique: true,
    };
    Ok(CapacityRun {
        messages,
        fact: fact.clone(),
        fact_index,
        case,
    })
}

/// Every tenth message asserts a new 30-token fact (one profile line of
/// `FACT gNNNNN=...;` plus its newline); the rest is short chatter.
pub fn generate_growth_run(len: u64, seed: u64, counter: &TokenCounter) -> Vec<Message> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let line_chars = 30 * counter.chars_per_token() - 1;
    (0..len)
        .map(|i| {
            let text = if i % 10 == 0 {
                let key = format!("g{:05}", i / 10);
                let pad = line_chars - "FACT =;".len() - key.len();
                render_marker(&key, &filler_chars(&mut rng, pad).replace(' ', "-"))
            } else {
                noise_text(&mut rng)
            };
            Message::new(i, alternating_role(i), text, counter)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::FactTable;
    use proptest::prelude::*;

    fn fact(p: Placement) -> FactSpec {
        FactSpec::new("cap_cohort", "TCGA-PAAD-178", p).unwrap()
    }

    #[test]
    fn end_of_ten_is_index_nine() {
        let run = generate_capacity_run(10, &fact(Placement::End), 1, 100, &TokenCounter::default()).unwrap();
        assert_eq!(run.fact_index, 9);
    }

    #[test]
    fn middle_of_fifty_thousand() {
        let band = placement_band(50_000, Placement::Middle).unwrap();
        assert_eq!((band.start, band.end), (22_500, 27_500));
    }

    #[test]
    fn fillers_and_carrier_are_exact() {
        let c = TokenCounter::default();
        let run = generate_capacity_run(200, &fact(Placement::Middle), 4, 100, &c).unwrap();
        assert!(run.messages.iter().all(|m| m.token_count == 100));
        let table = FactTable::from_messages(&run.messages);
        assert_eq!(table.history("cap_cohort"), &[("TCGA-PAAD-178".to_string(), run.fact_index)]);
        run.case.verify(&table).unwrap();
    }

    #[test]
    fn deterministic_per_seed() {
        let c = TokenCounter::default();
        let a = generate_capacity_run(500, &fact(Placement::Beginning), 9, 14, &c).unwrap();
        let b = generate_capacity_run(500, &fact(Placement::Beginning), 9, 14, &c).unwrap();
        assert_eq!(a, b);
        let other = generate_capacity_run(500, &fact(Placement::Beginning), 10, 14, &c).unwrap();
        assert_ne!(a.messages, other.messages);
    }

    #[test]
    fn explicit_index_bounds() {
        assert!(placement_band(5, Placement::Index(4)).is_ok());
        assert_eq!(
            placement_band(5, Placement::Index(5)),
            Err(GenerationError::IndexOutOfRange { index: 5, len: 5 })
        );
        assert_eq!(placement_band(0, Placement::End), Err(GenerationError::EmptyRun));
    }

    #[test]
    fn growth_facts_are_thirty_tokens() {
        let c = TokenCounter::default();
        let run = generate_growth_run(100, 3, &c);
        let facts: Vec<_> = run.iter().filter(|m| m.index % 10 == 0).collect();
        assert_eq!(facts.len(), 10);
        for m in facts {
            // The profile line carries one extra newline character.
            assert_eq!(m.text.len() + 1, 120);
            assert_eq!(crate::facts::parse_markers(&m.text).len(), 1);
        }
    }

    proptest! {
        #[test]
        fn bands_follow_percentages(len in 1u64..200_000, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = resolve_placement(len, Placement::Beginning, &mut rng).unwrap();
            let m = resolve_placement(len, Placement::Middle, &mut rng).unwrap();
            let e = resolve_placement(len, Placement::End, &mut rng).unwrap();
            let (lf, bf, mf, ef) = (len as f64, b as f64, m as f64, e as f64);
            prop_assert!(b == 0 || bf < 0.05 * lf);
            prop_assert!(e == len - 1 || ef >= 0.95 * lf);
            prop_assert!(mf >= (0.45 * lf).floor() && mf < (0.55 * lf).ceil().max((0.45 * lf).floor() + 1.0));
            prop_assert!(e < len);
        }
    }
}
