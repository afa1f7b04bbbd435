use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::citation::{citation_supports, NliMemo};
use super::vote::Thought;
use super::ScoringError;
use crate::providers::{rank_score, RetrievalHit};

/// A retrieved text unit and the history of its quality score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    /// Source URL when the search engine supplies one, otherwise a content hash.
    pub id: String,
    pub title: String,
    pub body: String,
    /// `score_history[t]` is the score after `t` updates; index 0 is the
    /// retrieval-time score.
    pub score_history: Vec<f64>,
    /// The query whose retrieval produced this passage.
    pub retrieval_batch: String,
}

impl Passage {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        body: impl Into<String>,
        initial_score: f64,
        retrieval_batch: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            body: body.into(),
            score_history: vec![initial_score],
            retrieval_batch: retrieval_batch.into(),
        }
    }

    /// Builds a passage from hit `hit` of a batch of `n`, scored by rank.
    pub fn from_hit(hit: &RetrievalHit, n: usize, batch: &str) -> Self {
        let id = if hit.source_url.trim().is_empty() {
            let digest = Sha256::digest(format!("{}\n{}", hit.title, hit.snippet).as_bytes());
            format!("sha256:{}", hex::encode(&digest[..12]))
        } else {
            hit.source_url.clone()
        };
        Self::new(id, &hit.title, &hit.snippet, rank_score(hit.rank, n), batch)
    }

    /// Current score.
    pub fn score(&self) -> f64 {
        *self.score_history.last().expect("score history is never empty")
    }

    /// Text as shown in prompts: `title | body`.
    pub fn prompt_text(&self) -> String {
        if self.title.is_empty() {
            self.body.clone()
        } else {
            format!("{} | {}", self.title, self.body)
        }
    }
}

/// Per-passage weights of previous score, normalized citation frequency
/// and vote confidence in the score update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl RetrievalWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Self {
        Self { w1, w2, w3 }
    }

    /// Keeps the search engine's score unchanged.
    pub fn retrieval_only() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        let parts = [self.w1, self.w2, self.w3];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(format!("retrieval weights must be finite and non-negative: {self:?}"));
        }
        if parts.iter().sum::<f64>() <= 0.0 {
            return Err("retrieval weights must not all be zero".into());
        }
        Ok(())
    }
}

impl Default for RetrievalWeights {
    fn default() -> Self {
        Self::new(0.2, 0.55, 0.25)
    }
}

/// Quality-weighted number of statements that cite the passage shown at
/// 1-based `index`. Thoughts must already be scored.
pub fn weighted_citation_frequency(
    index: u32,
    passage: &Passage,
    thoughts: &[Thought],
    nli: &NliMemo<'_>,
) -> Result<f64, ScoringError> {
    let mut total = 0.0;
    for (i, t) in thoughts.iter().enumerate() {
        let rho = t.quality.ok_or(ScoringError::MissingQuality(i))?;
        let mut hits = 0u32;
        for s in &t.statements {
            if citation_supports(index, passage, s, nli)? {
                hits += 1;
            }
        }
        total += rho * hits as f64;
    }
    Ok(total)
}

/// Weighted citation frequency of every passage in a prompt context, in
/// context order.
pub fn citation_frequencies(
    thoughts: &[Thought],
    passages: &[Passage],
    nli: &NliMemo<'_>,
) -> Result<Vec<f64>, ScoringError> {
    passages
        .iter()
        .enumerate()
        .map(|(i, p)| weighted_citation_frequency(i as u32 + 1, p, thoughts, nli))
        .collect()
}

/// Divides by the batch maximum. An all-zero batch stays all zero.
pub fn normalize_frequencies(freqs: &[f64]) -> Vec<f64> {
    let max = freqs.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return vec![0.0; freqs.len()];
    }
    freqs.iter().map(|f| f / max).collect()
}

/// Appends and returns `w1·σ + w2·ν̄ + w3·CI`.
pub fn update_passage_score(passage: &mut Passage, nu_bar: f64, ci: f64, w: &RetrievalWeights) -> f64 {
    let next = w.w1 * passage.score() + w.w2 * nu_bar + w.w3 * ci;
    passage.score_history.push(next);
    next
}
