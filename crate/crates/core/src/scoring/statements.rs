use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([0-9]+)\]").unwrap());

/// One sentence of a rationale and the passages it cites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    /// Sentence body without markers or the terminal period.
    pub text: String,
    /// 1-based passage indices within the prompt context, in marker order.
    pub citations: Vec<u32>,
    /// Markers that pointed outside `1..=n_passages`.
    #[serde(default)]
    pub invalid_citations: Vec<u32>,
}

impl Statement {
    pub fn marker_count(&self) -> usize {
        self.citations.len() + self.invalid_citations.len()
    }
}

#[derive(Default)]
struct Builder {
    statements: Vec<Statement>,
    body: String,
    citations: Vec<u32>,
    invalid: Vec<u32>,
}

impl Builder {
    fn body_is_empty(&self) -> bool {
        self.body.trim().is_empty()
    }

    fn marker(&mut self, index: u32, valid: bool) {
        // a marker group right after a sentence's period belongs to that sentence
        let target = if self.body_is_empty() {
            self.statements.last_mut()
        } else {
            None
        };
        let (cites, invalid) = match target {
            Some(prev) => (&mut prev.citations, &mut prev.invalid_citations),
            None => (&mut self.citations, &mut self.invalid),
        };
        if valid {
            cites.push(index);
        } else {
            invalid.push(index);
        }
    }

    fn flush(&mut self) {
        let text = self.body.split_whitespace().collect::<Vec<_>>().join(" ");
        self.body.clear();
        if text.is_empty() {
            return;
        }
        self.statements.push(Statement {
            text,
            citations: std::mem::take(&mut self.citations),
            invalid_citations: std::mem::take(&mut self.invalid),
        });
    }

    fn text(&mut self, segment: &str) {
        let mut chars = segment.chars().peekable();
        while let Some(c) = chars.next() {
            // a period directly followed by a letter or digit is not terminal ("3.5", "U.S")
            if c == '.' && chars.peek().is_none_or(|n| !n.is_alphanumeric()) {
                self.flush();
                continue;
            }
            self.body.push(c);
        }
    }
}

/// Splits a rationale into statements at sentence-terminal periods and
/// attaches each `[n]` marker to its sentence. Markers outside
/// `1..=n_passages` are kept aside as invalid. Text without any period
/// still yields one statement.
pub fn extract_statements(raw: &str, n_passages: usize) -> Vec<Statement> {
    let mut b = Builder::default();
    let mut pos = 0;
    for caps in MARKER.captures_iter(raw) {
        let m = caps.get(0).unwrap();
        b.text(&raw[pos..m.start()]);
        let index: Option<u32> = caps[1].parse().ok();
        match index {
            Some(i) if i >= 1 && (i as usize) <= n_passages => b.marker(i, true),
            Some(i) => b.marker(i, false),
            None => b.marker(u32::MAX, false),
        }
        pos = m.end();
    }
    b.text(&raw[pos..]);
    b.flush();
    if b.statements.is_empty() && !raw.trim().is_empty() {
        // markers only, no sentence body
        b.statements.push(Statement {
            text: raw.trim().to_string(),
            citations: std::mem::take(&mut b.citations),
            invalid_citations: std::mem::take(&mut b.invalid),
        });
    }
    b.statements
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_rationale() {
        let s = extract_statements("Todd Boehly was the President of Guggenheim Partners [2][3][4][6][7].", 7);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].text, "Todd Boehly was the President of Guggenheim Partners");
        assert_eq!(s[0].citations, vec![2, 3, 4, 6, 7]);
        assert!(s[0].invalid_citations.is_empty());
    }

    #[test]
    fn uncited_sentence() {
        let s = extract_statements("Paris is in France.", 3);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].text, "Paris is in France");
        assert!(s[0].citations.is_empty());
    }

    #[test]
    fn out_of_range_marker_recorded() {
        let s = extract_statements("A [9].", 7);
        assert_eq!(s.len(), 1);
        assert!(s[0].citations.is_empty());
        assert_eq!(s[0].invalid_citations, vec![9]);
        let s = extract_statements("A [0].", 7);
        assert_eq!(s[0].invalid_citations, vec![0]);
    }

    #[test]
    fn two_sentences_with_markers() {
        let raw = "Steve Masiello was born on September 2, 1977 [2][3]. John Gallagher is the current head coach of the Manhattan Jaspers basketball team [1][4][5].";
        let s = extract_statements(raw, 7);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].citations, vec![2, 3]);
        assert_eq!(s[1].citations, vec![1, 4, 5]);
    }

    #[test]
    fn markers_after_period_attach_backwards() {
        let s = extract_statements("A is B. [1] C is D.[2]", 3);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].citations, vec![1]);
        assert_eq!(s[1].citations, vec![2]);
    }

    #[test]
    fn inline_markers_and_decimals() {
        let s = extract_statements("Todd [1] earned 3.5 million dollars", 3);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].text, "Todd earned 3.5 million dollars");
        assert_eq!(s[0].citations, vec![1]);
    }

    #[test]
    fn markers_only_still_one_statement() {
        let s = extract_statements("[1][2]", 3);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].citations, vec![1, 2]);
    }

    #[test]
    fn empty_rationale() {
        assert!(extract_statements("   ", 3).is_empty());
    }
}
