use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::scoring::Passage;

/// Scored passages gathered for one (sub-)question, in retrieval order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub passages: Vec<Passage>,
}

impl Context {
    pub fn new(passages: Vec<Passage>) -> Self {
        Self { passages }
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    /// Union of several contexts. A passage seen more than once keeps the
    /// slot of its first appearance and the copy with the highest score.
    pub fn merge<'a>(contexts: impl IntoIterator<Item = &'a Context>) -> Context {
        let mut slot: HashMap<String, usize> = HashMap::new();
        let mut passages: Vec<Passage> = Vec::new();
        for ctx in contexts {
            for p in &ctx.passages {
                match slot.get(&p.id) {
                    Some(&i) => {
                        if p.score() > passages[i].score() {
                            passages[i] = p.clone();
                        }
                    }
                    None => {
                        slot.insert(p.id.clone(), passages.len());
                        passages.push(p.clone());
                    }
                }
            }
        }
        Context { passages }
    }

    /// Passages by descending score; equal scores keep retrieval order.
    pub fn ranked(&self) -> Vec<&Passage> {
        let mut refs: Vec<&Passage> = self.passages.iter().collect();
        refs.sort_by(|a, b| b.score().total_cmp(&a.score()));
        refs
    }

    /// The `k` best passages, cloned.
    pub fn top(&self, k: usize) -> Vec<Passage> {
        self.ranked().into_iter().take(k).cloned().collect()
    }

    /// Replaces passages by id with updated copies.
    pub fn absorb(&mut self, updated: &[Passage]) {
        let by_id: HashMap<&str, &Passage> = updated.iter().map(|p| (p.id.as_str(), p)).collect();
        for p in self.passages.iter_mut() {
            if let Some(u) = by_id.get(p.id.as_str()) {
                *p = (*u).clone();
            }
        }
    }

    /// Passage id and the query that retrieved it.
    pub fn provenance(&self) -> impl Iterator<Item = (&str, &str)> {
        self.passages
            .iter()
            .map(|p| (p.id.as_str(), p.retrieval_batch.as_str()))
    }
}
