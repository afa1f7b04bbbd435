//! Exact match and token F1 in the usual SQuAD convention.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;

use super::dataset::{fever_label, DatasetKind};

static ARTICLES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(a|an|the)\b").unwrap());

/// Lowercase, drop ASCII punctuation, drop articles, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lower = text.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    let no_articles = ARTICLES.replace_all(&no_punct, " ");
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// 1.0 when the normalized prediction equals any normalized gold answer.
pub fn exact_match(pred: &str, golds: &[String]) -> f64 {
    let p = normalize_answer(pred);
    if golds.iter().any(|g| normalize_answer(g) == p) {
        1.0
    } else {
        0.0
    }
}

fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalize_answer(pred);
    let g = normalize_answer(gold);
    let pt: Vec<&str> = p.split_whitespace().collect();
    let gt: Vec<&str> = g.split_whitespace().collect();
    if pt.is_empty() || gt.is_empty() {
        return if pt.is_empty() && gt.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gt {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pt {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pt.len() as f64;
    let recall = common as f64 / gt.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-overlap F1 over the gold answers; 0 when there are none.
pub fn f1(pred: &str, golds: &[String]) -> f64 {
    golds.iter().map(|g| token_f1(pred, g)).fold(0.0, f64::max)
}

/// Verdict match: both sides are mapped to their labels, falling back to
/// the uppercased text.
pub fn label_match(pred: &str, golds: &[String]) -> f64 {
    let key = |s: &str| fever_label(s).map(str::to_string).unwrap_or_else(|| s.trim().to_uppercase());
    let p = key(pred);
    if golds.iter().any(|g| key(g) == p) {
        1.0
    } else {
        0.0
    }
}

/// EM and, where the dataset reports it, F1, both in [0, 1].
pub fn score(kind: DatasetKind, pred: &str, golds: &[String]) -> (f64, Option<f64>) {
    match kind {
        DatasetKind::Fever => (label_match(pred, golds), None),
        _ => (exact_match(pred, golds), Some(f1(pred, golds))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Vec<String> {
        vec![s.to_string()]
    }

    #[test]
    fn em_cases() {
        assert_eq!(exact_match("President", &g("President")), 1.0);
        assert_eq!(exact_match("the president", &g("President")), 1.0);
        assert_eq!(exact_match("Vice President", &g("President")), 0.0);
        assert_eq!(exact_match("U.S.A.", &g("usa")), 1.0);
        assert_eq!(exact_match("x", &[]), 0.0);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_answer("  The  Quick, Brown fox! "), "quick brown fox");
        assert_eq!(normalize_answer("an apple a day"), "apple day");
        assert_eq!(normalize_answer("theory"), "theory");
    }

    #[test]
    fn f1_cases() {
        let v = f1("oklahoma agricultural college", &g("oklahoma agricultural and mechanical college"));
        assert!((v - 0.75).abs() < 1e-12);
        assert_eq!(f1("Guggenheim Partners", &g("guggenheim partners")), 1.0);
        assert_eq!(f1("red", &g("blue")), 0.0);
        assert_eq!(f1("the", &g("a")), 1.0);
        assert_eq!(f1("the", &g("blue")), 0.0);
        assert_eq!(f1("blue", &[g("red"), g("blue")].concat()), 1.0);
    }

    #[test]
    fn verdicts() {
        assert_eq!(label_match("Supports", &g("SUPPORTS")), 1.0);
        assert_eq!(label_match("refuted.", &g("REFUTES")), 1.0);
        assert_eq!(label_match("NOT ENOUGH INFO", &g("SUPPORTS")), 0.0);
        assert_eq!(score(DatasetKind::Fever, "supports", &g("SUPPORTS")), (1.0, None));
        assert_eq!(score(DatasetKind::OpenSquad, "a b", &g("a b")).1, Some(1.0));
    }
}
