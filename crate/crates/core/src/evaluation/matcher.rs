//! Exact-answer matching.

/// Case-folds, collapses whitespace runs, and removes spaces next to
/// comparison operators, so "p < 0.001" and "P<0.001" normalize alike.
pub fn normalize(text: &str) -> String {
    let folded = text.to_uppercase().to_lowercase();
    let words: Vec<&str> = folded.split_whitespace().collect();
    let mut out = String::with_capacity(folded.len());
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            let prev = out.chars().next_back();
            let next = w.chars().next();
            if !(prev.is_some_and(is_operator) || next.is_some_and(is_operator)) {
                out.push(' ');
            }
        }
        out.push_str(w);
    }
    out
}

fn is_operator(c: char) -> bool {
    matches!(c, '<' | '>' | '=' | '≤' | '≥')
}

/// True when the normalized expected answer is a substring of the normalized
/// actual answer. An empty expected answer never matches.
pub fn match_answer(expected: &str, actual: &str) -> bool {
    let e = normalize(expected);
    !e.is_empty() && normalize(actual).contains(&e)
}

/// All parts must match.
pub fn match_all(expected_parts: &[String], actual: &str) -> bool {
    !expected_parts.is_empty() && expected_parts.iter().all(|p| match_answer(p, actual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn operator_spacing() {
        assert!(match_answer("p < 0.001", "the current cutoff is p<0.001."));
        assert!(match_answer("p<0.001", "P  <\t0.001"));
    }

    #[test]
    fn exactness() {
        assert!(!match_answer("178", "approximately 180 samples"));
        assert!(match_answer("FAP", "FAP+ CAFs drive chemoresistance"));
        assert!(!match_answer("", "anything"));
        assert!(!match_answer("   ", "anything"));
    }

    #[test]
    fn multi_part() {
        let parts = vec!["alpha".to_string(), "beta".to_string()];
        assert!(match_all(&parts, "Beta and ALPHA"));
        assert!(!match_all(&parts, "alpha only"));
        assert!(!match_all(&[], "x"));
    }

    proptest! {
        #[test]
        fn case_symmetry(e in "[a-zA-Z0-9<>=. ]{1,12}", a in "[a-zA-Z0-9<>=. ]{0,40}") {
            prop_assert_eq!(match_answer(&e, &a), match_answer(&e.to_lowercase(), &a.to_uppercase()));
        }

        #[test]
        fn self_match(e in "[a-zA-Z0-9<>=.]{1,8}( [a-zA-Z0-9<>=.]{1,8}){0,3}") {
            let padded = format!("prefix {} suffix", e);
            prop_assert!(match_answer(&e, &padded));
        }
    }
}
