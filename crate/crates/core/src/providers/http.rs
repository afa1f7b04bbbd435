//! Live HTTP adapters.
//!
//! * [`OpenAiChat`]: OpenAI-compatible `/chat/completions`, one request with
//!   `n` choices.
//! * [`SerpApiSearch`]: SerpApi Google search. Only `organic_results` are
//!   used; answer boxes and knowledge graphs are ignored, and ranks are
//!   reassigned 1..N in response order so gaps left by filtered entries
//!   disappear.
//! * [`HttpNli`]: POST `{premise, hypothesis}`, expects
//!   `{"entailment": <probability>}`; binarized at a threshold.
//! * [`HttpEmbedder`]: OpenAI-compatible `/embeddings`; output renormalized
//!   to unit length.
//!
//! All adapters retry transport failures, 429 and 5xx responses three times
//! in total with exponential backoff.

use std::thread;
use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder};
use serde::Deserialize;
use serde_json::{json, Value};

use super::{
    rerank_contiguous, CompletionRequest, Embedder, Entailment, LanguageModel, ProviderError,
    ProviderKind, RetrievalHit, Retriever,
};
use crate::text::normalize_unit;

const ATTEMPTS: u32 = 3;
const BACKOFF_BASE: Duration = Duration::from_millis(500);

fn client(timeout: Duration) -> Client {
    Client::builder()
        .timeout(timeout)
        .build()
        .expect("reqwest client builds with default TLS config")
}

fn env_secret(var: &str) -> Result<String, ProviderError> {
    std::env::var(var).map_err(|_| ProviderError::Config(format!("environment variable {var} is not set")))
}

fn send_json(kind: ProviderKind, build: impl Fn() -> RequestBuilder) -> Result<Value, ProviderError> {
    let mut last = None;
    for attempt in 0..ATTEMPTS {
        if attempt > 0 {
            thread::sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
        }
        match build().send() {
            Ok(resp) => {
                let status = resp.status();
                let body = resp.text().map_err(|e| ProviderError::Transport {
                    kind,
                    message: e.to_string(),
                })?;
                if status.is_success() {
                    return serde_json::from_str(&body).map_err(|e| ProviderError::Decode {
                        kind,
                        message: e.to_string(),
                    });
                }
                let err = ProviderError::Status {
                    kind,
                    status: status.as_u16(),
                    body: body.chars().take(500).collect(),
                };
                if status.as_u16() == 429 || status.is_server_error() {
                    last = Some(err);
                    continue;
                }
                return Err(err);
            }
            Err(e) => {
                last = Some(ProviderError::Transport {
                    kind,
                    message: e.to_string(),
                })
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Debug, Clone)]
pub struct OpenAiChat {
    client: Client,
    base_url: String,
    model: String,
    api_key: String,
}

impl OpenAiChat {
    /// Reads the bearer token from the environment variable `key_var`.
    pub fn from_env(base_url: &str, model: &str, key_var: &str) -> Result<Self, ProviderError> {
        Ok(Self {
            client: client(Duration::from_secs(120)),
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key: env_secret(key_var)?,
        })
    }

    fn body(&self, req: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": req.messages,
            "n": req.n,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    #[serde(default)]
    index: usize,
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

pub(crate) fn parse_chat_response(value: Value, n: usize) -> Result<Vec<String>, ProviderError> {
    let decode = |message: String| ProviderError::Decode {
        kind: ProviderKind::Llm,
        message,
    };
    let mut resp: ChatResponse = serde_json::from_value(value).map_err(|e| decode(e.to_string()))?;
    resp.choices.sort_by_key(|c| c.index);
    if resp.choices.len() != n {
        return Err(decode(format!("expected {n} choices, got {}", resp.choices.len())));
    }
    Ok(resp
        .choices
        .into_iter()
        .map(|c| c.message.content.unwrap_or_default())
        .collect())
}

impl LanguageModel for OpenAiChat {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, ProviderError> {
        let url = format!("{}/chat/completions", self.base_url);
        let body = self.body(req);
        let value = send_json(ProviderKind::Llm, || {
            self.client.post(&url).bearer_auth(&self.api_key).json(&body)
        })?;
        parse_chat_response(value, req.n as usize)
    }
}

#[derive(Debug, Clone)]
pub struct SerpApiSearch {
    client: Client,
    base_url: String,
    api_key: String,
}

impl SerpApiSearch {
    pub fn from_env(base_url: &str, key_var: &str) -> Result<Self, ProviderError> {
        Ok(Self {
            client: client(Duration::from_secs(60)),
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: env_secret(key_var)?,
        })
    }
}

#[derive(Deserialize)]
struct SerpResponse {
    #[serde(default)]
    organic_results: Vec<SerpOrganic>,
}

#[derive(Deserialize)]
struct SerpOrganic {
    #[serde(default)]
    position: Option<u32>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    snippet: String,
    #[serde(default)]
    link: String,
}

pub(crate) fn parse_serp_response(value: Value, top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError> {
    let mut resp: SerpResponse = serde_json::from_value(value).map_err(|e| ProviderError::Decode {
        kind: ProviderKind::Search,
        message: e.to_string(),
    })?;
    resp.organic_results
        .sort_by_key(|r| r.position.unwrap_or(u32::MAX));
    let mut hits: Vec<RetrievalHit> = resp
        .organic_results
        .into_iter()
        .filter(|r| !(r.title.trim().is_empty() && r.snippet.trim().is_empty()))
        .take(top_n)
        .map(|r| RetrievalHit {
            rank: 0,
            title: r.title.trim().to_string(),
            snippet: r.snippet.trim().to_string(),
            source_url: r.link,
        })
        .collect();
    rerank_contiguous(&mut hits);
    Ok(hits)
}

impl Retriever for SerpApiSearch {
    fn retrieve(&self, query: &str, top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError> {
        let url = format!("{}/search.json", self.base_url);
        let num = top_n.to_string();
        let value = send_json(ProviderKind::Search, || {
            self.client.get(&url).query(&[
                ("engine", "google"),
                ("q", query),
                ("num", num.as_str()),
                ("api_key", self.api_key.as_str()),
            ])
        })?;
        parse_serp_response(value, top_n)
    }
}

#[derive(Debug, Clone)]
pub struct HttpNli {
    client: Client,
    url: String,
    threshold: f64,
}

impl HttpNli {
    pub fn new(url: &str, threshold: f64) -> Self {
        Self {
            client: client(Duration::from_secs(60)),
            url: url.to_string(),
            threshold,
        }
    }
}

pub(crate) fn parse_nli_response(value: &Value, threshold: f64) -> Result<bool, ProviderError> {
    let p = value
        .get("entailment")
        .and_then(Value::as_f64)
        .ok_or_else(|| ProviderError::Decode {
            kind: ProviderKind::Nli,
            message: "missing numeric \"entailment\" field".into(),
        })?;
    Ok(p >= threshold)
}

impl Entailment for HttpNli {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<bool, ProviderError> {
        let body = json!({"premise": premise, "hypothesis": hypothesis});
        let value = send_json(ProviderKind::Nli, || self.client.post(&self.url).json(&body))?;
        parse_nli_response(&value, self.threshold)
    }
}

#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    client: Client,
    base_url: String,
    model: String,
    api_key: Option<String>,
}

impl HttpEmbedder {
    /// `key_var` is optional; self-hosted endpoints often need no token.
    pub fn new(base_url: &str, model: &str, key_var: Option<&str>) -> Self {
        Self {
            client: client(Duration::from_secs(60)),
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key: key_var.and_then(|v| std::env::var(v).ok()),
        }
    }
}

pub(crate) fn parse_embedding_response(value: &Value) -> Result<Vec<f64>, ProviderError> {
    let decode = |message: &str| ProviderError::Decode {
        kind: ProviderKind::Embed,
        message: message.to_string(),
    };
    let arr = value
        .pointer("/data/0/embedding")
        .and_then(Value::as_array)
        .ok_or_else(|| decode("missing data[0].embedding"))?;
    let mut v = arr
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| decode("non-numeric embedding component")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() || v.iter().all(|&x| x == 0.0) {
        return Err(decode("zero embedding"));
    }
    normalize_unit(&mut v);
    Ok(v)
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let url = format!("{}/embeddings", self.base_url);
        let body = json!({"model": self.model, "input": text});
        let value = send_json(ProviderKind::Embed, || {
            let req = self.client.post(&url).json(&body);
            match &self.api_key {
                Some(key) => req.bearer_auth(key),
                None => req,
            }
        })?;
        parse_embedding_response(&value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chat_choices_ordered_by_index() {
        let v = json!({"choices": [
            {"index": 1, "message": {"role": "assistant", "content": "b"}},
            {"index": 0, "message": {"role": "assistant", "content": "a"}}
        ]});
        assert_eq!(parse_chat_response(v, 2).unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn chat_choice_count_checked() {
        let v = json!({"choices": [{"index": 0, "message": {"content": "a"}}]});
        assert!(parse_chat_response(v, 2).is_err());
    }

    #[test]
    fn serp_organic_results_reranked() {
        let v = json!({
            "answer_box": {"answer": "ignored"},
            "organic_results": [
                {"position": 3, "title": "C", "snippet": "c", "link": "u3"},
                {"position": 1, "title": "A", "snippet": "a", "link": "u1"},
                {"position": 2, "title": "", "snippet": "", "link": "u2"}
            ]
        });
        let hits = parse_serp_response(v, 10).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!((hits[0].rank, hits[0].title.as_str()), (1, "A"));
        assert_eq!((hits[1].rank, hits[1].title.as_str()), (2, "C"));
    }

    #[test]
    fn serp_empty_is_valid() {
        assert!(parse_serp_response(json!({}), 5).unwrap().is_empty());
    }

    #[test]
    fn nli_threshold() {
        assert!(parse_nli_response(&json!({"entailment": 0.5}), 0.5).unwrap());
        assert!(!parse_nli_response(&json!({"entailment": 0.49}), 0.5).unwrap());
        assert!(parse_nli_response(&json!({}), 0.5).is_err());
    }

    #[test]
    fn embedding_normalized() {
        let v = parse_embedding_response(&json!({"data": [{"embedding": [3.0, 4.0]}]})).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.8).abs() < 1e-12);
        assert!(parse_embedding_response(&json!({"data": [{"embedding": [0.0]}]})).is_err());
    }
}
