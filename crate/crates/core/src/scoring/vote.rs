use serde::{Deserialize, Serialize};

use super::citation::{citation_precision, citation_recall, NliMemo};
use super::passage::Passage;
use super::statements::Statement;
use super::ScoringError;
use crate::text::canonical_answer;

/// Weights of the constant, recall and precision terms of thought quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl QualityWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Plain self-consistency: every thought weighs 1.
    pub fn uniform() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        let parts = [self.alpha, self.beta, self.gamma];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(format!("quality weights must be finite and non-negative: {self:?}"));
        }
        if parts.iter().sum::<f64>() <= 0.0 {
            return Err("quality weights must not all be zero".into());
        }
        Ok(())
    }
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self::new(0.2, 0.4, 0.4)
    }
}

/// A sampled rationale and answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thought {
    pub raw: String,
    pub statements: Vec<Statement>,
    pub answer: String,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub quality: Option<f64>,
}

impl Thought {
    pub fn new(raw: impl Into<String>, statements: Vec<Statement>, answer: impl Into<String>) -> Self {
        Self {
            raw: raw.into(),
            statements,
            answer: answer.into(),
            recall: None,
            precision: None,
            quality: None,
        }
    }

    pub fn with_quality(mut self, quality: f64) -> Self {
        self.quality = Some(quality);
        self
    }
}

pub fn thought_quality(rec: f64, prec: f64, w: &QualityWeights) -> f64 {
    w.alpha * 1.0 + w.beta * rec + w.gamma * prec
}

/// Fills recall, precision and quality for every thought.
pub fn score_thoughts(
    thoughts: &mut [Thought],
    passages: &[Passage],
    nli: &NliMemo<'_>,
    w: &QualityWeights,
) -> Result<(), ScoringError> {
    for t in thoughts.iter_mut() {
        let rec = citation_recall(t, passages, nli)?;
        let prec = citation_precision(t, passages, nli)?;
        t.recall = Some(rec);
        t.precision = Some(prec);
        t.quality = Some(thought_quality(rec, prec, w));
    }
    Ok(())
}

/// The completions of one sampling batch and the decision drawn from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotePool {
    pub thoughts: Vec<Thought>,
    pub chosen: Option<String>,
    pub confidence: Option<f64>,
    /// Number of distinct canonical answers.
    pub distinct_count: usize,
}

impl VotePool {
    pub fn new(thoughts: Vec<Thought>) -> Self {
        let distinct_count = distinct_answers(&thoughts).len();
        Self {
            thoughts,
            chosen: None,
            confidence: None,
            distinct_count,
        }
    }

    /// Runs the vote and confidence, storing both.
    pub fn decide(&mut self) -> Result<(String, f64), ScoringError> {
        let chosen = weighted_vote(self)?;
        let ci = confidence(self, &chosen)?;
        self.chosen = Some(chosen.clone());
        self.confidence = Some(ci);
        Ok((chosen, ci))
    }
}

/// Canonical answers with the raw text of their first occurrence, in order
/// of first occurrence.
fn distinct_answers(thoughts: &[Thought]) -> Vec<(String, &str)> {
    let mut seen: Vec<(String, &str)> = Vec::new();
    for t in thoughts {
        let key = canonical_answer(&t.answer);
        if !seen.iter().any(|(k, _)| *k == key) {
            seen.push((key, t.answer.trim()));
        }
    }
    seen
}

fn qualities(pool: &VotePool) -> Result<Vec<f64>, ScoringError> {
    pool.thoughts
        .iter()
        .enumerate()
        .map(|(i, t)| t.quality.ok_or(ScoringError::MissingQuality(i)))
        .collect()
}

/// Answer with the largest total quality; ties go to the answer that was
/// sampled first. Returns the raw text of that answer's first occurrence.
pub fn weighted_vote(pool: &VotePool) -> Result<String, ScoringError> {
    if pool.thoughts.is_empty() {
        return Err(ScoringError::EmptyPool);
    }
    let rho = qualities(pool)?;
    let distinct = distinct_answers(&pool.thoughts);
    let keys: Vec<String> = pool.thoughts.iter().map(|t| canonical_answer(&t.answer)).collect();
    let mut mass = vec![0.0f64; distinct.len()];
    for (i, key) in keys.iter().enumerate() {
        let h = distinct.iter().position(|(k, _)| k == key).expect("listed");
        mass[h] += rho[i];
    }
    let mut best = 0;
    for h in 1..mass.len() {
        if mass[h] > mass[best] {
            best = h;
        }
    }
    Ok(distinct[best].1.to_string())
}

/// Share of total quality carried by thoughts agreeing with `chosen`.
pub fn confidence(pool: &VotePool, chosen: &str) -> Result<f64, ScoringError> {
    if pool.thoughts.is_empty() {
        return Err(ScoringError::EmptyPool);
    }
    let rho = qualities(pool)?;
    let key = canonical_answer(chosen);
    let total: f64 = rho.iter().sum();
    if total <= 0.0 {
        return Err(ScoringError::ZeroMass);
    }
    let agree: f64 = pool
        .thoughts
        .iter()
        .zip(&rho)
        .filter(|(t, _)| canonical_answer(&t.answer) == key)
        .map(|(_, r)| r)
        .sum();
    Ok((agree / total).clamp(0.0, 1.0))
}
