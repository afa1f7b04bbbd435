//! Record/replay wrappers around live providers.
//!
//! * `Live`: call through, no cache.
//! * `Record`: read-through cache; misses call the live provider and store
//!   the response, so an interrupted run resumes from what was recorded.
//! * `Replay`: cache only; a miss is an error and the inner provider is
//!   never touched.

use std::str::FromStr;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::cache::{request_key, CacheEntry, FixtureCache};
use super::{
    CompletionRequest, Embedder, Entailment, LanguageModel, ProviderError, ProviderKind,
    RetrievalHit, Retriever,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    #[default]
    Live,
    Record,
    Replay,
}

impl FromStr for ProviderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown provider mode {other:?} (live, record, replay)")),
        }
    }
}

#[derive(Clone)]
struct Layer {
    mode: ProviderMode,
    cache: Option<Arc<FixtureCache>>,
}

impl Layer {
    fn new(mode: ProviderMode, cache: Option<Arc<FixtureCache>>) -> Result<Self, ProviderError> {
        if mode != ProviderMode::Live && cache.is_none() {
            return Err(ProviderError::Config(format!(
                "{mode:?} mode needs a fixture directory"
            )));
        }
        Ok(Self { mode, cache })
    }

    fn call<T, F>(&self, kind: ProviderKind, request: serde_json::Value, live: F) -> Result<T, ProviderError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, ProviderError>,
    {
        let cache = match (self.mode, &self.cache) {
            (ProviderMode::Live, _) | (_, None) => return live(),
            (_, Some(cache)) => cache,
        };
        let key = request_key(kind, &request);
        match cache.get(kind, &key) {
            Ok(entry) => serde_json::from_slice(&entry.response).map_err(|e| ProviderError::Decode {
                kind,
                message: format!("fixture {key}: {e}"),
            }),
            Err(e) if e.is_cache_miss() && self.mode == ProviderMode::Record => {
                let value = live()?;
                let bytes = serde_json::to_vec(&value).map_err(|e| ProviderError::Decode {
                    kind,
                    message: e.to_string(),
                })?;
                cache.put(&CacheEntry::new(kind, request, bytes))?;
                Ok(value)
            }
            Err(e) => Err(e),
        }
    }
}

macro_rules! cached_wrapper {
    ($name:ident, $tr:ident) => {
        pub struct $name {
            inner: Arc<dyn $tr>,
            layer: Layer,
        }

        impl $name {
            pub fn new(
                inner: Arc<dyn $tr>,
                mode: ProviderMode,
                cache: Option<Arc<FixtureCache>>,
            ) -> Result<Self, ProviderError> {
                Ok(Self {
                    inner,
                    layer: Layer::new(mode, cache)?,
                })
            }
        }
    };
}

cached_wrapper!(CachedLanguageModel, LanguageModel);
cached_wrapper!(CachedRetriever, Retriever);
cached_wrapper!(CachedEntailment, Entailment);
cached_wrapper!(CachedEmbedder, Embedder);

impl LanguageModel for CachedLanguageModel {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, ProviderError> {
        let request = serde_json::to_value(req).expect("request serializes");
        let texts: Vec<String> = self
            .layer
            .call(ProviderKind::Llm, request, || self.inner.complete(req))?;
        if texts.len() != req.n as usize {
            return Err(ProviderError::Decode {
                kind: ProviderKind::Llm,
                message: format!("expected {} completions, got {}", req.n, texts.len()),
            });
        }
        Ok(texts)
    }
}

impl Retriever for CachedRetriever {
    fn retrieve(&self, query: &str, top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError> {
        self.layer.call(
            ProviderKind::Search,
            json!({"query": query, "top_n": top_n}),
            || self.inner.retrieve(query, top_n),
        )
    }
}

impl Entailment for CachedEntailment {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<bool, ProviderError> {
        self.layer.call(
            ProviderKind::Nli,
            json!({"premise": premise, "hypothesis": hypothesis}),
            || self.inner.entail(premise, hypothesis),
        )
    }
}

impl Embedder for CachedEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        self.layer
            .call(ProviderKind::Embed, json!({"text": text}), || self.inner.embed(text))
    }
}
