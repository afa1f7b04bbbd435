//! Offline providers: a guard that refuses live calls, deterministic local
//! embedders and NLI, and closure adapters for tests.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::{
    CompletionRequest, Embedder, Entailment, LanguageModel, ProviderError, ProviderKind,
    RetrievalHit, Retriever,
};
use crate::text::normalize_unit;

/// Fails every call. Sits behind replay wrappers so that any attempt to
/// reach the network surfaces as an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct LiveGuard;

impl LanguageModel for LiveGuard {
    fn complete(&self, _req: &CompletionRequest) -> Result<Vec<String>, ProviderError> {
        Err(ProviderError::LiveCallForbidden(ProviderKind::Llm))
    }
}

impl Retriever for LiveGuard {
    fn retrieve(&self, _query: &str, _top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError> {
        Err(ProviderError::LiveCallForbidden(ProviderKind::Search))
    }
}

impl Entailment for LiveGuard {
    fn entail(&self, _premise: &str, _hypothesis: &str) -> Result<bool, ProviderError> {
        Err(ProviderError::LiveCallForbidden(ProviderKind::Nli))
    }
}

impl Embedder for LiveGuard {
    fn embed(&self, _text: &str) -> Result<Vec<f64>, ProviderError> {
        Err(ProviderError::LiveCallForbidden(ProviderKind::Embed))
    }
}

/// Feature-hashing bag-of-words embedder. Deterministic and local; identical
/// texts map to identical unit vectors.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(256)
    }
}

impl Embedder for HashingEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let mut v = vec![0.0; self.dim];
        let tokens = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase);
        let mut any = false;
        for token in tokens {
            let digest = Sha256::digest(token.as_bytes());
            let bucket = u64::from_le_bytes(digest[..8].try_into().unwrap()) as usize % self.dim;
            let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
            any = true;
        }
        if !any || v.iter().all(|&x| x == 0.0) {
            // fall back to a fixed axis so the output still has unit norm
            v[0] = 1.0;
        }
        normalize_unit(&mut v);
        Ok(v)
    }
}

/// Embedder backed by an explicit text → vector table.
#[derive(Debug, Clone, Default)]
pub struct TableEmbedder {
    table: HashMap<String, Vec<f64>>,
}

impl TableEmbedder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, text: impl Into<String>, vector: Vec<f64>) -> Self {
        self.table.insert(text.into(), vector);
        self
    }
}

impl Embedder for TableEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let mut v = self.table.get(text).cloned().ok_or_else(|| ProviderError::CacheMiss {
            kind: ProviderKind::Embed,
            key: text.to_string(),
        })?;
        normalize_unit(&mut v);
        Ok(v)
    }
}

/// Entailment by normalized containment: the premise entails the
/// hypothesis iff every hypothesis word occurs in the premise, in order.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalNli;

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Entailment for LexicalNli {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<bool, ProviderError> {
        let p = words(premise);
        let h = words(hypothesis);
        if h.is_empty() {
            return Ok(false);
        }
        Ok(p.windows(h.len()).any(|w| w == h.as_slice()))
    }
}

/// Language model backed by a closure.
pub struct FnLanguageModel<F>(F);

impl<F> FnLanguageModel<F>
where
    F: Fn(&CompletionRequest) -> Result<Vec<String>, ProviderError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F> LanguageModel for FnLanguageModel<F>
where
    F: Fn(&CompletionRequest) -> Result<Vec<String>, ProviderError> + Send + Sync,
{
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, ProviderError> {
        (self.0)(req)
    }
}

/// Retriever backed by a closure.
pub struct FnRetriever<F>(F);

impl<F> FnRetriever<F>
where
    F: Fn(&str, usize) -> Result<Vec<RetrievalHit>, ProviderError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F> Retriever for FnRetriever<F>
where
    F: Fn(&str, usize) -> Result<Vec<RetrievalHit>, ProviderError> + Send + Sync,
{
    fn retrieve(&self, query: &str, top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError> {
        (self.0)(query, top_n)
    }
}

/// Entailment backed by a closure.
pub struct FnEntailment<F>(F);

impl<F> FnEntailment<F>
where
    F: Fn(&str, &str) -> bool + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self(f)
    }
}

impl<F> Entailment for FnEntailment<F>
where
    F: Fn(&str, &str) -> bool + Send + Sync,
{
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<bool, ProviderError> {
        Ok((self.0)(premise, hypothesis))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::cosine;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn hashing_embedder_unit_norm_and_reflexive() {
        let e = HashingEmbedder::default();
        for text in ["Who is X?", "", "   ", "a b c d e f", "Todd Boehly"] {
            let v = e.embed(text).unwrap();
            assert!((norm(&v) - 1.0).abs() < 1e-6, "{text:?}");
        }
        let a = e.embed("Who is X?").unwrap();
        let b = e.embed("Who is X?").unwrap();
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_embedder_orthogonal_basis() {
        let e = TableEmbedder::new()
            .with("x", vec![1.0, 0.0, 0.0])
            .with("y", vec![0.0, 3.0, 0.0]);
        let x = e.embed("x").unwrap();
        let y = e.embed("y").unwrap();
        assert_eq!(cosine(&x, &y), 0.0);
        assert!((norm(&y) - 1.0).abs() < 1e-12);
        assert!(e.embed("z").is_err());
    }

    #[test]
    fn lexical_nli() {
        let nli = LexicalNli;
        let s = "Todd Boehly was the President of Guggenheim Partners";
        assert!(nli.entail(s, s).unwrap());
        assert!(nli
            .entail("Boehly was the President of Guggenheim Partners.", "the President of Guggenheim Partners")
            .unwrap());
        assert!(!nli.entail("Paris is in France", "Berlin is in Germany").unwrap());
    }

    #[test]
    fn guard_refuses_everything() {
        let g = LiveGuard;
        assert!(matches!(
            g.complete(&CompletionRequest::user("x")),
            Err(ProviderError::LiveCallForbidden(ProviderKind::Llm))
        ));
        assert!(g.retrieve("x", 1).is_err());
        assert!(g.entail("a", "b").is_err());
        assert!(g.embed("a").is_err());
    }
}
