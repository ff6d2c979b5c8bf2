//! Carrier text for synthetic conversations.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::facts::render_marker;

/// Lowercase words used for filler. None of them is a fact keyword.
const FILLER_WORDS: &[&str] = &[
    "sample", "batch", "reads", "plot", "cluster", "gene", "cell", "run", "queue", "node",
    "table", "column", "merge", "log", "scale", "axis", "panel", "draft", "note", "check",
    "align", "index", "count", "matrix", "subset", "label", "color", "legend", "figure", "trace",
    "lane", "flow", "score", "rank", "slice", "bin", "peak", "depth", "signal", "noise",
    "tissue", "slide", "stain", "field", "image", "mask", "tile", "crop", "zoom", "frame",
];

const NOISE_LINES: &[&str] = &[
    "Sounds good, thanks.",
    "Okay, that makes sense to me.",
    "Let me check that and get back to you.",
    "Great, continuing with the current plan.",
    "Thanks, that is really helpful for now.",
    "Got it, I will keep going on this.",
    "Understood, moving on to the next step.",
    "Perfect, that matches what I expected.",
    "Noted, I will update the shared notes.",
    "Interesting, we can discuss it at the next meeting.",
];

const TOOLS: &[&str] = &["DESeq2", "Seurat", "STAR", "limma", "GSEA", "Scanpy", "CellChat", "edgeR"];

const LOG_TEMPLATES: &[&str] = &[
    "Ran {tool} on batch {n}; {m} genes passed QC.",
    "{tool} done for slide set {n}, {m} cells kept.",
    "Rerun of {tool} on lane {n} gave {m} hits.",
    "Batch {n} processed with {tool}: {m} features.",
];

/// Research topics: a key stem and a phrase used in carriers and questions.
pub const TOPICS: &[(&str, &str)] = &[
    ("threshold", "significance cutoff"),
    ("foldchange", "fold-change cutoff"),
    ("resolution", "clustering resolution"),
    ("cohort", "discovery cohort"),
    ("samples", "sample count"),
    ("marker", "marker gene"),
    ("normalization", "normalization method"),
    ("correction", "batch correction"),
    ("pathway", "pathway database"),
    ("palette", "figure palette"),
    ("hypothesis", "working hypothesis"),
    ("model", "survival model"),
    ("qcfilter", "quality filter"),
    ("aligner", "read aligner"),
    ("reference", "reference genome"),
    ("celltype", "cell-type annotation"),
];

const DIRECTIVE_TEMPLATES: &[&str] = &[
    "Please use this {phrase}: {marker}",
    "For the {phrase}, go with {marker}",
    "Set the {phrase} as {marker}",
];

const UPDATE_TEMPLATES: &[&str] = &[
    "Change of plan on the {phrase}: {marker}",
    "Update: {marker} replaces the old {phrase}.",
    "Revising the {phrase} to {marker}",
];

const CODE_CHARS: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ23456789";

/// A fixed-length random value for a topic. Values of one topic never
/// contain each other as substrings unless equal.
pub fn topic_value(rng: &mut ChaCha8Rng, topic: usize) -> String {
    match TOPICS[topic].0 {
        "threshold" => format!("p<0.{:04}", rng.random_range(1..10_000u32)),
        "foldchange" => format!("FC>{}.{:02}", rng.random_range(1..5u32), rng.random_range(0..100u32)),
        "samples" => format!("n={:04}", rng.random_range(100..10_000u32)),
        "resolution" => format!("res={}.{:02}", rng.random_range(0..3u32), rng.random_range(0..100u32)),
        "cohort" => format!("TCGA-{}", code(rng, 4)),
        stem => format!("{}-{}", stem[..3].to_uppercase(), code(rng, 5)),
    }
}

fn code(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| char::from(CODE_CHARS[rng.random_range(0..CODE_CHARS.len())]))
        .collect()
}

/// Key names are `{stem}_{serial}`, unique within a conversation.
pub fn key_name(topic: usize, serial: usize) -> String {
    format!("{}_{serial:03}", TOPICS[topic].0)
}

pub fn directive_text(rng: &mut ChaCha8Rng, topic: usize, key: &str, value: &str) -> String {
    fill(DIRECTIVE_TEMPLATES.choose(rng).expect("non-empty"), topic, key, value)
}

pub fn update_text(rng: &mut ChaCha8Rng, topic: usize, key: &str, value: &str) -> String {
    fill(UPDATE_TEMPLATES.choose(rng).expect("non-empty"), topic, key, value)
}

fn fill(template: &str, topic: usize, key: &str, value: &str) -> String {
    template
        .replace("{phrase}", TOPICS[topic].1)
        .replace("{marker}", &render_marker(key, value))
}

pub fn noise_text(rng: &mut ChaCha8Rng) -> String {
    NOISE_LINES.choose(rng).expect("non-empty").to_string()
}

pub fn log_text(rng: &mut ChaCha8Rng) -> String {
    let t = LOG_TEMPLATES.choose(rng).expect("non-empty");
    t.replace("{tool}", TOOLS.choose(rng).expect("non-empty"))
        .replace("{n}", &rng.random_range(1..40u32).to_string())
        .replace("{m}", &rng.random_range(100..20_000u32).to_string())
}

/// Filler of exactly `tokens` heuristic tokens: `4 * tokens` characters of
/// single-spaced words, no leading or trailing space.
pub fn filler_text(rng: &mut ChaCha8Rng, tokens: usize) -> String {
    filler_chars(rng, tokens * 4)
}

/// Single-spaced filler words totalling exactly `chars` characters.
pub fn filler_chars(rng: &mut ChaCha8Rng, chars: usize) -> String {
    let mut out = String::with_capacity(chars + 16);
    while out.len() < chars {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(FILLER_WORDS.choose(rng).expect("non-empty"));
    }
    out.truncate(chars);
    while out.ends_with(' ') {
        out.pop();
        out.push('s');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::parse_markers;
    use crate::tokens::TokenCounter;
    use rand::SeedableRng;

    #[test]
    fn filler_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = TokenCounter::default();
        for n in [1usize, 14, 100, 333] {
            let f = filler_text(&mut rng, n);
            assert_eq!(f.len(), 4 * n);
            assert_eq!(c.count(&f), n);
            assert!(!f.starts_with(' ') && !f.ends_with(' ') && !f.contains("  "));
            assert!(parse_markers(&f).is_empty());
        }
    }

    #[test]
    fn carriers_hold_one_marker() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for topic in 0..TOPICS.len() {
            let v = topic_value(&mut rng, topic);
            let key = key_name(topic, 7);
            for text in [directive_text(&mut rng, topic, &key, &v), update_text(&mut rng, topic, &key, &v)] {
                let m = parse_markers(&text);
                assert_eq!(m.len(), 1, "{text}");
                assert_eq!(m[0].value, v);
            }
        }
    }

    #[test]
    fn topic_values_have_fixed_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for topic in 0..TOPICS.len() {
            let len = topic_value(&mut rng, topic).len();
            for _ in 0..50 {
                assert_eq!(topic_value(&mut rng, topic).len(), len, "{}", TOPICS[topic].0);
            }
        }
    }
}
