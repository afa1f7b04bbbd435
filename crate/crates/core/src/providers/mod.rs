//! External service interfaces: chat completion, web retrieval, NLI
//! entailment and sentence embedding.
//!
//! Every pipeline dependency on the outside world goes through one of the
//! four traits here. [`cache`] and [`replay`] wrap any implementation in a
//! content-addressed fixture store so runs can be recorded once and replayed
//! offline; [`http`] holds the live adapters and [`stub`] the offline ones.

pub mod cache;
pub mod http;
pub mod replay;
pub mod stub;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheEntry, FixtureCache};
pub use replay::{CachedEmbedder, CachedEntailment, CachedLanguageModel, CachedRetriever, ProviderMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Llm,
    Search,
    Nli,
    Embed,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::Llm => "llm",
            ProviderKind::Search => "search",
            ProviderKind::Nli => "nli",
            ProviderKind::Embed => "embed",
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("{kind} transport error: {message}")]
    Transport { kind: ProviderKind, message: String },
    #[error("{kind} endpoint returned HTTP {status}: {body}")]
    Status {
        kind: ProviderKind,
        status: u16,
        body: String,
    },
    #[error("{kind} response could not be decoded: {message}")]
    Decode { kind: ProviderKind, message: String },
    #[error("no recorded {kind} fixture for key {key}")]
    CacheMiss { kind: ProviderKind, key: String },
    #[error("live {0} call attempted while live calls are disabled")]
    LiveCallForbidden(ProviderKind),
    #[error("{0}")]
    Config(String),
    #[error("fixture i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ProviderError {
    pub fn is_cache_miss(&self) -> bool {
        matches!(self, ProviderError::CacheMiss { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// One chat-completion call asking for `n` sampled completions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub n: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Sampling seed; also separates retries of an otherwise identical
    /// request in the fixture cache.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CompletionRequest {
    pub fn user(prompt: impl Into<String>) -> Self {
        Self {
            messages: vec![ChatMessage {
                role: Role::User,
                content: prompt.into(),
            }],
            n: 1,
            temperature: 0.0,
            max_tokens: 512,
            seed: None,
        }
    }

    pub fn samples(mut self, n: u32, temperature: f64) -> Self {
        self.n = n.max(1);
        self.temperature = temperature;
        self
    }

    pub fn max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Concatenated message text, mostly for stubs that route on content.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// One ranked web-search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub rank: u32,
    pub title: String,
    pub snippet: String,
    pub source_url: String,
}

pub trait LanguageModel: Send + Sync {
    /// Returns exactly `req.n` completion texts.
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, ProviderError>;
}

pub trait Retriever: Send + Sync {
    /// At most `top_n` hits, ranked 1..N without gaps.
    fn retrieve(&self, query: &str, top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError>;
}

pub trait Entailment: Send + Sync {
    /// Binary verdict: does `premise` entail `hypothesis`?
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<bool, ProviderError>;
}

pub trait Embedder: Send + Sync {
    /// Fixed-dimension vector with unit L2 norm.
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

macro_rules! forward_arc {
    ($tr:ident, $method:ident ( $($arg:ident : $ty:ty),* ) -> $ret:ty) => {
        impl<T: $tr + ?Sized> $tr for Arc<T> {
            fn $method(&self, $($arg: $ty),*) -> $ret {
                (**self).$method($($arg),*)
            }
        }
    };
}

forward_arc!(LanguageModel, complete(req: &CompletionRequest) -> Result<Vec<String>, ProviderError>);
forward_arc!(Retriever, retrieve(query: &str, top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError>);
forward_arc!(Entailment, entail(premise: &str, hypothesis: &str) -> Result<bool, ProviderError>);
forward_arc!(Embedder, embed(text: &str) -> Result<Vec<f64>, ProviderError>);

/// Initial passage score from a 1-based retrieval rank in a batch of `n`.
pub fn rank_score(rank: u32, n: usize) -> f64 {
    debug_assert!(rank >= 1 && (rank as usize) <= n.max(1));
    1.0 - (rank.saturating_sub(1) as f64) / (n.max(1) as f64)
}

/// Reassigns ranks 1..N in the given order.
pub fn rerank_contiguous(hits: &mut [RetrievalHit]) {
    for (i, hit) in hits.iter_mut().enumerate() {
        hit.rank = i as u32 + 1;
    }
}

/// The set of services one pipeline run talks to.
#[derive(Clone)]
pub struct Providers {
    pub llm: Arc<dyn LanguageModel>,
    pub retriever: Arc<dyn Retriever>,
    /// `None` puts citation scoring in marker-only mode.
    pub nli: Option<Arc<dyn Entailment>>,
    pub embedder: Arc<dyn Embedder>,
}

impl Providers {
    pub fn new(
        llm: Arc<dyn LanguageModel>,
        retriever: Arc<dyn Retriever>,
        embedder: Arc<dyn Embedder>,
    ) -> Self {
        Self {
            llm,
            retriever,
            nli: None,
            embedder,
        }
    }

    pub fn with_nli(mut self, nli: Arc<dyn Entailment>) -> Self {
        self.nli = Some(nli);
        self
    }
}
