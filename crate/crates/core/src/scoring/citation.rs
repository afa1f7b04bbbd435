//! Citation support, recall and precision.
//!
//! With an NLI provider, support means entailment: a statement is recalled
//! when the concatenation of its cited passages entails it, and a marker is
//! precise when its passage alone entails the statement or dropping it
//! breaks the joint entailment. Without one, scoring degrades to marker
//! validity: recalled means "has a valid marker", precise means "points at
//! an existing passage".

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use super::passage::Passage;
use super::statements::Statement;
use super::vote::Thought;
use crate::providers::{Entailment, ProviderError};

/// Memoizes entailment verdicts for one scoring pass; sampled rationales
/// repeat the same statements many times.
pub struct NliMemo<'a> {
    nli: Option<&'a dyn Entailment>,
    seen: RefCell<HashMap<(String, String), bool>>,
}

impl<'a> NliMemo<'a> {
    pub fn new(nli: Option<&'a dyn Entailment>) -> Self {
        Self {
            nli,
            seen: RefCell::new(HashMap::new()),
        }
    }

    pub fn enabled(&self) -> bool {
        self.nli.is_some()
    }

    /// `Ok(false)` when no provider is configured.
    pub fn entail(&self, premise: &str, hypothesis: &str) -> Result<bool, ProviderError> {
        let Some(nli) = self.nli else {
            return Ok(false);
        };
        let key = (premise.to_string(), hypothesis.to_string());
        if let Some(&v) = self.seen.borrow().get(&key) {
            return Ok(v);
        }
        let v = nli.entail(premise, hypothesis)?;
        self.seen.borrow_mut().insert(key, v);
        Ok(v)
    }
}

/// Whether statement `s` cites the passage shown at 1-based `index`, either
/// by marker or, when NLI is available, by entailment.
pub fn citation_supports(
    index: u32,
    passage: &Passage,
    statement: &Statement,
    nli: &NliMemo<'_>,
) -> Result<bool, ProviderError> {
    if statement.citations.contains(&index) {
        return Ok(true);
    }
    nli.entail(&passage.prompt_text(), &statement.text)
}

fn joined(passages: &[Passage], indices: &BTreeSet<u32>) -> String {
    indices
        .iter()
        .filter_map(|&i| passages.get(i as usize - 1))
        .map(Passage::prompt_text)
        .collect::<Vec<_>>()
        .join("\n")
}

fn cited_set(statement: &Statement, passages: &[Passage]) -> BTreeSet<u32> {
    statement
        .citations
        .iter()
        .copied()
        .filter(|&i| i >= 1 && (i as usize) <= passages.len())
        .collect()
}

fn statement_recalled(
    statement: &Statement,
    passages: &[Passage],
    nli: &NliMemo<'_>,
) -> Result<bool, ProviderError> {
    let cited = cited_set(statement, passages);
    if cited.is_empty() {
        return Ok(false);
    }
    if !nli.enabled() {
        return Ok(true);
    }
    nli.entail(&joined(passages, &cited), &statement.text)
}

/// Fraction of the thought's statements supported by their citations.
pub fn citation_recall(thought: &Thought, passages: &[Passage], nli: &NliMemo<'_>) -> Result<f64, ProviderError> {
    if thought.statements.is_empty() {
        return Ok(0.0);
    }
    let mut supported = 0usize;
    for s in &thought.statements {
        if statement_recalled(s, passages, nli)? {
            supported += 1;
        }
    }
    Ok(supported as f64 / thought.statements.len() as f64)
}

/// Fraction of the thought's citation markers that are relevant. A thought
/// with no markers scores 0.
pub fn citation_precision(
    thought: &Thought,
    passages: &[Passage],
    nli: &NliMemo<'_>,
) -> Result<f64, ProviderError> {
    let total: usize = thought.statements.iter().map(Statement::marker_count).sum();
    if total == 0 {
        return Ok(0.0);
    }
    let mut relevant = 0usize;
    for s in &thought.statements {
        let in_range: Vec<u32> = s
            .citations
            .iter()
            .copied()
            .filter(|&i| i >= 1 && (i as usize) <= passages.len())
            .collect();
        if !nli.enabled() {
            relevant += in_range.len();
            continue;
        }
        let cited: BTreeSet<u32> = in_range.iter().copied().collect();
        let joint = !cited.is_empty() && nli.entail(&joined(passages, &cited), &s.text)?;
        for &p in &in_range {
            let alone = nli.entail(&passages[p as usize - 1].prompt_text(), &s.text)?;
            let necessary = joint && {
                let mut rest = cited.clone();
                rest.remove(&p);
                rest.is_empty() || !nli.entail(&joined(passages, &rest), &s.text)?
            };
            if alone || necessary {
                relevant += 1;
            }
        }
    }
    Ok(relevant as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::stub::{FnEntailment, LexicalNli};
    use crate::scoring::extract_statements;

    fn passages(texts: &[&str]) -> Vec<Passage> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Passage::new(format!("p{i}"), "T", *t, 1.0, "b"))
            .collect()
    }

    fn thought(raw: &str, n: usize) -> Thought {
        Thought::new(raw, extract_statements(raw, n), "x")
    }

    #[test]
    fn marker_supports() {
        let ps = passages(&["a", "b"]);
        let s = &extract_statements("A [2].", 2)[0];
        let off = NliMemo::new(None);
        assert!(citation_supports(2, &ps[1], s, &off).unwrap());
        assert!(!citation_supports(1, &ps[0], s, &off).unwrap());
    }

    #[test]
    fn nli_supports_without_marker() {
        let ps = passages(&["Paris is in France"]);
        let s = &extract_statements("Paris is in France.", 1)[0];
        let nli = FnEntailment::new(|_: &str, _: &str| true);
        assert!(citation_supports(1, &ps[0], s, &NliMemo::new(Some(&nli))).unwrap());
        assert!(!citation_supports(1, &ps[0], s, &NliMemo::new(None)).unwrap());
    }

    #[test]
    fn recall_marker_mode() {
        let ps = passages(&["a", "b"]);
        let off = NliMemo::new(None);
        assert_eq!(citation_recall(&thought("A [1]. B [2].", 2), &ps, &off).unwrap(), 1.0);
        assert_eq!(citation_recall(&thought("A [1]. B.", 2), &ps, &off).unwrap(), 0.5);
        assert_eq!(citation_recall(&thought("A [7].", 2), &ps, &off).unwrap(), 0.0);
    }

    #[test]
    fn precision_marker_mode() {
        let ps = passages(&["a", "b", "c", "d", "e", "f", "g"]);
        let off = NliMemo::new(None);
        assert_eq!(citation_precision(&thought("A [1][2].", 7), &ps, &off).unwrap(), 1.0);
        let p = citation_precision(&thought("A [1][2][3][4][9].", 7), &ps, &off).unwrap();
        assert!((p - 0.8).abs() < 1e-15);
        assert_eq!(citation_precision(&thought("A. B.", 7), &ps, &off).unwrap(), 0.0);
    }

    #[test]
    fn nli_recall_and_precision() {
        let ps = passages(&[
            "Todd Boehly was the President of Guggenheim Partners",
            "Mark Walter is CEO of Guggenheim Partners",
        ]);
        let nli = LexicalNli;
        let memo = NliMemo::new(Some(&nli));
        // [1] alone entails; [2] is neither sufficient nor necessary
        let t = thought("Todd Boehly was the President of Guggenheim Partners [1][2].", 2);
        assert_eq!(citation_recall(&t, &ps, &memo).unwrap(), 1.0);
        assert_eq!(citation_precision(&t, &ps, &memo).unwrap(), 0.5);
        // cites only the wrong passage
        let t = thought("Todd Boehly was the President of Guggenheim Partners [2].", 2);
        assert_eq!(citation_recall(&t, &ps, &memo).unwrap(), 0.0);
        assert_eq!(citation_precision(&t, &ps, &memo).unwrap(), 0.0);
    }

    #[test]
    fn nli_precision_credits_jointly_necessary_markers() {
        // entailment needs both passages together
        let nli = FnEntailment::new(|premise: &str, _h: &str| premise.contains("alpha") && premise.contains("beta"));
        let ps = passages(&["alpha", "beta", "gamma"]);
        let memo = NliMemo::new(Some(&nli));
        let t = thought("Claim [1][2][3].", 3);
        assert_eq!(citation_recall(&t, &ps, &memo).unwrap(), 1.0);
        let p = citation_precision(&t, &ps, &memo).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15, "{p}");
    }
}
