//! Run configuration: TOML file, environment, then explicit overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demos::DemoMode;
use crate::providers::http::{HttpEmbedder, HttpNli, OpenAiChat, SerpApiSearch};
use crate::providers::stub::{HashingEmbedder, LiveGuard};
use crate::providers::{Embedder, Entailment, FixtureCache, ProviderError, ProviderMode, Providers};
use crate::transcript::cached_providers;
use crate::traversal::PipelineConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("environment variable {var}: {message}")]
    Env { var: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-3.5-turbo".into(),
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub base_url: String,
    pub api_key_env: String,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            base_url: "https://serpapi.com/search.json".into(),
            api_key_env: "SERPAPI_API_KEY".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    /// Local feature hashing; no service needed.
    #[default]
    Hashing,
    /// OpenAI-compatible `/embeddings` endpoint.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dim: usize,
    pub base_url: String,
    pub model: String,
    pub api_key_env: Option<String>,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Hashing,
            dim: 256,
            base_url: "http://localhost:8080/v1".into(),
            model: "all-MiniLM-L6-v2".into(),
            api_key_env: None,
        }
    }
}

/// Entailment service. Without one, citations are judged by their markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NliConfig {
    pub url: String,
    #[serde(default = "default_nli_threshold")]
    pub threshold: f64,
}

fn default_nli_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Subsample the medium bucket at the dataset's customary rate.
    pub subsample_medium: bool,
    /// Overrides the customary rate when set.
    pub medium_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: ProviderMode,
    pub fixtures: Option<PathBuf>,
    pub workers: usize,
    pub pipeline: PipelineConfig,
    pub llm: LlmConfig,
    pub search: SearchConfig,
    pub embedder: EmbedderConfig,
    pub nli: Option<NliConfig>,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Live,
            fixtures: None,
            workers: 1,
            pipeline: PipelineConfig::default(),
            llm: LlmConfig::default(),
            search: SearchConfig::default(),
            embedder: EmbedderConfig::default(),
            nli: None,
            eval: EvalConfig::default(),
        }
    }
}

/// Values given explicitly, e.g. on the command line. They win over
/// everything else.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<ProviderMode>,
    pub fixtures: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub demo_mode: Option<DemoMode>,
}

/// Environment variables read by [`RunConfig::resolve`].
pub const ENV_MODE: &str = "HGOT_MODE";
pub const ENV_FIXTURES: &str = "HGOT_FIXTURES";
pub const ENV_WORKERS: &str = "HGOT_WORKERS";
pub const ENV_SEED: &str = "HGOT_SEED";
pub const ENV_DEMO_MODE: &str = "HGOT_DEMO_MODE";

fn env_parse<T: std::str::FromStr>(
    env: &dyn Fn(&str) -> Option<String>,
    var: &str,
) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match env(var) {
        None => Ok(None),
        Some(v) if v.trim().is_empty() => Ok(None),
        Some(v) => v.trim().parse().map(Some).map_err(|e: T::Err| ConfigError::Env {
            var: var.into(),
            message: e.to_string(),
        }),
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Defaults, then `file`, then the environment, then `overrides`;
    /// the result is validated.
    pub fn resolve(
        file: Option<&Path>,
        env: &dyn Fn(&str) -> Option<String>,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(m) = env_parse(env, ENV_MODE)? {
            cfg.mode = m;
        }
        if let Some(f) = env(ENV_FIXTURES).filter(|s| !s.trim().is_empty()) {
            cfg.fixtures = Some(PathBuf::from(f));
        }
        if let Some(w) = env_parse(env, ENV_WORKERS)? {
            cfg.workers = w;
        }
        if let Some(s) = env_parse(env, ENV_SEED)? {
            cfg.pipeline.seed = s;
        }
        if let Some(d) = env_parse(env, ENV_DEMO_MODE)? {
            cfg.pipeline.demo_mode = d;
        }

        if let Some(m) = overrides.mode {
            cfg.mode = m;
        }
        if let Some(f) = &overrides.fixtures {
            cfg.fixtures = Some(f.clone());
        }
        if let Some(w) = overrides.workers {
            cfg.workers = w;
        }
        if let Some(s) = overrides.seed {
            cfg.pipeline.seed = s;
        }
        if let Some(d) = overrides.demo_mode {
            cfg.pipeline.demo_mode = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.pipeline.validate().map_err(ConfigError::Invalid)?;
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.mode != ProviderMode::Live && self.fixtures.is_none() {
            return Err(ConfigError::Invalid(format!(
                "{} mode needs a fixture directory (--fixtures or {ENV_FIXTURES})",
                serde_plain_mode(self.mode)
            )));
        }
        if self.embedder.kind == EmbedderKind::Hashing && self.embedder.dim == 0 {
            return Err(ConfigError::Invalid("embedder dim must be at least 1".into()));
        }
        if let Some(nli) = &self.nli {
            if !(0.0..=1.0).contains(&nli.threshold) {
                return Err(ConfigError::Invalid(format!("nli threshold {} outside [0, 1]", nli.threshold)));
            }
        }
        if let Some(r) = self.eval.medium_rate {
            if !(r > 0.0 && r <= 1.0) {
                return Err(ConfigError::Invalid(format!("medium_rate {r} outside (0, 1]")));
            }
        }
        Ok(())
    }

    /// The configuration as TOML lines, for report headers.
    pub fn header_lines(&self) -> Vec<String> {
        toml::to_string(self)
            .unwrap_or_default()
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect()
    }

    fn live_providers(&self) -> Result<Providers, ProviderError> {
        let llm = OpenAiChat::from_env(&self.llm.base_url, &self.llm.model, &self.llm.api_key_env)?;
        let search = SerpApiSearch::from_env(&self.search.base_url, &self.search.api_key_env)?;
        let embedder: Arc<dyn Embedder> = match self.embedder.kind {
            EmbedderKind::Hashing => Arc::new(HashingEmbedder::new(self.embedder.dim)),
            EmbedderKind::Http => Arc::new(HttpEmbedder::new(
                &self.embedder.base_url,
                &self.embedder.model,
                self.embedder.api_key_env.as_deref(),
            )),
        };
        let mut p = Providers::new(Arc::new(llm), Arc::new(search), embedder);
        if let Some(nli) = &self.nli {
            let nli: Arc<dyn Entailment> = Arc::new(HttpNli::new(&nli.url, nli.threshold));
            p = p.with_nli(nli);
        }
        Ok(p)
    }

    /// Providers for the configured mode. Replay never touches the network:
    /// every inner provider is a guard that fails if reached.
    pub fn providers(&self) -> Result<Providers, ProviderError> {
        match self.mode {
            ProviderMode::Live => self.live_providers(),
            ProviderMode::Record => {
                let cache = Arc::new(FixtureCache::open(self.fixture_dir()?)?);
                cached_providers(self.live_providers()?, ProviderMode::Record, cache)
            }
            ProviderMode::Replay => {
                let cache = Arc::new(FixtureCache::open_existing(self.fixture_dir()?)?);
                let mut inner = Providers::new(Arc::new(LiveGuard), Arc::new(LiveGuard), Arc::new(LiveGuard));
                if self.nli.is_some() {
                    inner = inner.with_nli(Arc::new(LiveGuard));
                }
                cached_providers(inner, ProviderMode::Replay, cache)
            }
        }
    }

    fn fixture_dir(&self) -> Result<&Path, ProviderError> {
        self.fixtures
            .as_deref()
            .ok_or_else(|| ProviderError::Config("no fixture directory configured".into()))
    }
}

fn serde_plain_mode(m: ProviderMode) -> &'static str {
    match m {
        ProviderMode::Live => "live",
        ProviderMode::Record => "record",
        ProviderMode::Replay => "replay",
    }
}
