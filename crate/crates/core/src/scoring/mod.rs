//! Thought and passage scoring.
//!
//! A sampled completion is a rationale plus an answer. The rationale is cut
//! into statements carrying `[n]` citation markers; citation recall and
//! precision give each thought a quality weight, the weights drive the
//! answer vote and its confidence, and the same weights turn citation
//! counts into per-passage score updates.

mod citation;
mod passage;
mod statements;
mod vote;

use thiserror::Error;

use crate::providers::ProviderError;

pub use citation::{citation_precision, citation_recall, citation_supports, NliMemo};
pub use passage::{
    citation_frequencies, normalize_frequencies, update_passage_score, weighted_citation_frequency,
    Passage, RetrievalWeights,
};
pub use statements::{extract_statements, Statement};
pub use vote::{confidence, score_thoughts, thought_quality, weighted_vote, QualityWeights, Thought, VotePool};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("vote pool is empty")]
    EmptyPool,
    #[error("thought {0} has no quality score")]
    MissingQuality(usize),
    #[error("total thought quality is zero")]
    ZeroMass,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}
