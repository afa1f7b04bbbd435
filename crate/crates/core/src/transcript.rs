//! Scripted providers for the Todd Boehly worked example.
//!
//! The top-level plan, self-reflection, formalization, rewrite and final
//! inference replies are the recorded ones. Search results and the
//! sub-question probes were never published, so those are filled in here,
//! chosen so that the final inference sees the seven recorded passages in
//! their recorded order.
//!
//! [`seed_fixtures`] runs the pipeline over these scripts in record mode,
//! which writes the replay fixtures used by the offline tests.

use std::path::Path;
use std::sync::Arc;

use crate::providers::stub::{HashingEmbedder, LiveGuard};
use crate::providers::{
    CachedEmbedder, CachedLanguageModel, CachedRetriever, CompletionRequest, Embedder, FixtureCache,
    LanguageModel, ProviderError, ProviderKind, ProviderMode, Providers, RetrievalHit, Retriever,
};
use crate::traversal::{Answer, Pipeline, PipelineConfig, PipelineError};

pub const QUESTION: &str = "What was Todd Boehly's former position at the firm where Mark Walter is the CEO?";
pub const STEP1_QUESTION: &str = "What is the name of the firm where Mark Walter is the CEO?";
pub const REWRITTEN_STEP2: &str = "What was Todd Boehly's former position at Guggenheim Partners?";

const PLAN_REPLY: &str = "Step 1: What is the name of the firm where Mark Walter is the CEO? Step 2: What was Todd Boehly's former position at the firm where Mark Walter is the CEO?\n\nDependencies: Step 2 depends on Step 1.";
const SELF_REFLECT_REPLY: &str = "Step 2 depends on Step 1.";
const FORMALIZE_REPLY: &str = "Step 1 -> Step 2";

const FULL_CITATION: &str = "Todd Boehly was the President of Guggenheim Partners [2][3][4][6][7].\n\nAnswer: President";
const SHORT_CITATION: &str = "Todd Boehly was the President of Guggenheim Partners [2][3][4][7].\n\nAnswer: President";

/// Choices that leave out passage [6].
pub const CHOICES_WITHOUT_SIX: [usize; 4] = [4, 5, 11, 16];

/// The twenty sampled completions of the final inference.
pub fn final_choices() -> Vec<String> {
    (0..20)
        .map(|i| {
            if CHOICES_WITHOUT_SIX.contains(&i) {
                SHORT_CITATION.to_string()
            } else {
                FULL_CITATION.to_string()
            }
        })
        .collect()
}

fn hit(rank: u32, title: &str, snippet: &str, url: &str) -> RetrievalHit {
    RetrievalHit {
        rank,
        title: title.into(),
        snippet: snippet.into(),
        source_url: url.into(),
    }
}

fn top_hits() -> Vec<RetrievalHit> {
    vec![
        hit(1, "Todd Boehly", "Todd Boehly is an American businessman and investor. He is the co-founder, chairman, chief executive officer and controlling member of Eldridge Industries, ...", "https://en.wikipedia.org/wiki/Todd_Boehly"),
        hit(2, "Eldridge Industries", "Eldridge is a holding company that invests in businesses across the insurance, asset management, real estate, technology and consumer sectors.", "https://www.eldridge.com/about"),
        hit(3, "Chelsea F.C. ownership", "A consortium fronted by Todd Boehly completed its takeover of Chelsea Football Club in May 2022.", "https://example.org/chelsea-ownership"),
        hit(4, "Todd Boehly | Forbes Profile", "Todd Boehly is a cofounder of Eldridge Industries and part owner of the Los Angeles Dodgers and the Los Angeles Lakers.", "https://example.org/forbes-todd-boehly-profile"),
        hit(5, "Los Angeles Dodgers ownership", "The Dodgers were bought in 2012 by Guggenheim Baseball Management, a group that included Todd Boehly.", "https://example.org/dodgers-ownership"),
        hit(6, "Boehly named chairman", "Todd Boehly was named chairman of the club following the completion of the sale.", "https://example.org/boehly-chairman"),
        hit(7, "Eldridge Industries leadership", "Todd L. Boehly, Chairman and Chief Executive Officer.", "https://example.org/eldridge-leadership"),
    ]
}

fn step1_hits() -> Vec<RetrievalHit> {
    vec![
        hit(1, "Mark Walter", "184 Mark Walter on the 2023 Forbes 400 - Mark Walter is CEO of investment firm Guggenheim Partners, which has over $300 billion in assets under management.", "https://www.forbes.com/profile/mark-walter/"),
        hit(2, "Mark Walter (businessman)", "Mark Walter is an American billionaire businessman and the controlling owner of the Los Angeles Dodgers.", "https://example.org/mark-walter-businessman"),
        hit(3, "Guggenheim Partners", "Guggenheim Partners, In 2000, he helped found Guggenheim Partners. Today, he is the CEO of Guggenheim Partners, which has rapidly grown into a global, diversified financial services firm with more than $260 billion in assets under management, 2,300 employees, and 25 offices in six countries around the world., Guggenheim Partners", "https://www.guggenheimpartners.com/firm/leadership/mark-walter"),
        hit(4, "Walter family", "Mark Walter and his wife Kimbra fund a number of conservation and education programmes.", "https://example.org/walter-family"),
        hit(5, "Chelsea FC consortium", "Mark Walter joined the consortium that purchased Chelsea FC in 2022.", "https://example.org/chelsea-consortium"),
    ]
}

fn step2_hits() -> Vec<RetrievalHit> {
    vec![
        hit(1, "Todd Boehly - Milken Institute", "Boehly was the President of Guggenheim Partners. He received his B.B.A. from the College of William & Mary, where he later founded the Boehly Center for Excellence in Finance, and studied at the London School of Economics., President", "https://milkeninstitute.org/people/todd-boehly"),
        hit(2, "Katie & Todd Boehly", "Prior to founding Eldridge Industries, Todd was President of Guggenheim Partners and founded the credit business at Guggenheim. He received his B.B.A. from The College of William & Mary, where he later founded The Boehly Center for Excellence in Finance, and studied at the London School of Economics., Prior to founding Eldridge Industries, Todd was President of Guggenheim Partners and founded the credit business at Guggenheim", "https://example.org/katie-todd-boehly-biography"),
        hit(3, "Katie & Todd Boehly", "Prior to founding Eldridge Industries, Todd was President of Guggenheim Partners and founded the credit business at Guggenheim., President of Guggenheim Partners", "https://example.org/katie-todd-boehly"),
        hit(4, "Todd Boehly", "Todd Boehly cofounded holding company Eldridge in 2015, after building Guggenheim Partners' credit business and serving as president. Boehly acquired some ...", "https://www.forbes.com/profile/todd-boehly/"),
        hit(5, "Todd L. Boehly", "Boehly was President of Guggenheim Partners and founded the credit business at Guggenheim. He received his B.B.A. from The College of William & Mary, where ...", "https://example.org/todd-l-boehly"),
        hit(6, "Guggenheim Partners leadership changes", "The firm announced a number of senior leadership changes in 2015.", "https://example.org/guggenheim-leadership-2015"),
        hit(7, "Guggenheim Investments", "Guggenheim Investments is the global asset management and investment advisory division of Guggenheim Partners.", "https://example.org/guggenheim-investments"),
    ]
}

fn top_probe_choices() -> Vec<String> {
    let rationale = "Todd Boehly is the co-founder, chairman and chief executive officer of Eldridge Industries [1].";
    (0..20)
        .map(|i| {
            let answer = match i {
                0..=8 => "Chairman",
                9..=14 => "Co-founder",
                _ => "Chief executive officer",
            };
            format!("{rationale}\n\nAnswer: {answer}")
        })
        .collect()
}

fn repeat(text: &str, n: usize) -> Vec<String> {
    vec![text.to_string(); n]
}

/// Language model that answers the worked example's prompts from a script.
#[derive(Debug, Default, Clone, Copy)]
pub struct ScriptedLanguageModel;

fn live_block(prompt: &str) -> &str {
    prompt.rsplit("\n\n---\n\n").next().unwrap_or(prompt)
}

fn live_question(block: &str) -> Option<&str> {
    block
        .lines()
        .find_map(|l| l.strip_prefix("Question: "))
        .map(str::trim)
}

impl LanguageModel for ScriptedLanguageModel {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, ProviderError> {
        let prompt = req.prompt_text();
        let block = live_block(&prompt);
        let unknown = || ProviderError::Transport {
            kind: ProviderKind::Llm,
            message: format!("no scripted reply for prompt ending {:?}", block),
        };
        let replies = if prompt.starts_with("Answer questions with short factoid answers.") {
            match live_question(block).ok_or_else(unknown)? {
                QUESTION if block.contains("[1] Mark Walter | ") => final_choices(),
                QUESTION => top_probe_choices(),
                STEP1_QUESTION => repeat(
                    "Mark Walter is CEO of investment firm Guggenheim Partners [1][3].\n\nAnswer: Guggenheim Partners",
                    20,
                ),
                REWRITTEN_STEP2 => repeat(
                    "Todd Boehly was the President of Guggenheim Partners [1][2][3][4][5].\n\nAnswer: President",
                    20,
                ),
                _ => return Err(unknown()),
            }
        } else if prompt.starts_with("Sketch a plan") {
            match live_question(block).ok_or_else(unknown)? {
                QUESTION => vec![PLAN_REPLY.to_string()],
                q => vec![format!("Step 1: {q}\n\nDependencies: None")],
            }
        } else if prompt.starts_with("Highlight interdependencies") {
            vec![SELF_REFLECT_REPLY.to_string()]
        } else if prompt.starts_with("Express the dependencies") {
            vec![FORMALIZE_REPLY.to_string()]
        } else if prompt.starts_with("Rewrite the last question") {
            vec![REWRITTEN_STEP2.to_string()]
        } else {
            return Err(unknown());
        };
        if replies.len() != req.n as usize {
            return Err(ProviderError::Decode {
                kind: ProviderKind::Llm,
                message: format!("script has {} replies, request wants {}", replies.len(), req.n),
            });
        }
        Ok(replies)
    }
}

/// Search engine returning the scripted result lists.
#[derive(Debug, Default, Clone, Copy)]
pub struct ScriptedRetriever;

impl Retriever for ScriptedRetriever {
    fn retrieve(&self, query: &str, top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError> {
        let mut hits = match query {
            QUESTION => top_hits(),
            STEP1_QUESTION => step1_hits(),
            REWRITTEN_STEP2 => step2_hits(),
            other => {
                return Err(ProviderError::Transport {
                    kind: ProviderKind::Search,
                    message: format!("no scripted results for {other:?}"),
                })
            }
        };
        hits.truncate(top_n);
        Ok(hits)
    }
}

/// The scripts plus a local hashing embedder; marker-only citation scoring.
pub fn scripted_providers() -> Providers {
    Providers::new(
        Arc::new(ScriptedLanguageModel),
        Arc::new(ScriptedRetriever),
        Arc::new(HashingEmbedder::default()),
    )
}

/// Providers that read every response from `cache` in the given mode,
/// falling through to `inner` where the mode allows it.
pub fn cached_providers(
    inner: Providers,
    mode: ProviderMode,
    cache: Arc<FixtureCache>,
) -> Result<Providers, ProviderError> {
    let llm = CachedLanguageModel::new(inner.llm, mode, Some(cache.clone()))?;
    let retriever = CachedRetriever::new(inner.retriever, mode, Some(cache.clone()))?;
    let embedder: Arc<dyn Embedder> = Arc::new(CachedEmbedder::new(inner.embedder, mode, Some(cache.clone()))?);
    let mut providers = Providers::new(Arc::new(llm), Arc::new(retriever), embedder);
    if let Some(nli) = inner.nli {
        providers = providers.with_nli(Arc::new(crate::providers::CachedEntailment::new(
            nli,
            mode,
            Some(cache),
        )?));
    }
    Ok(providers)
}

/// Offline providers over a fixture directory; any cache miss is an error
/// and nothing reaches the network.
pub fn replay_providers(dir: &Path) -> Result<Providers, ProviderError> {
    let cache = Arc::new(FixtureCache::open_existing(dir)?);
    let guard = Providers::new(Arc::new(LiveGuard), Arc::new(LiveGuard), Arc::new(LiveGuard));
    cached_providers(guard, ProviderMode::Replay, cache)
}

/// Runs the worked example over the scripts in record mode, writing its
/// fixtures into `dir`. Returns the answer and the number of fixture files.
pub fn seed_fixtures(dir: &Path, config: PipelineConfig) -> Result<(Answer, usize), PipelineError> {
    let cache = Arc::new(FixtureCache::open(dir)?);
    let providers = cached_providers(scripted_providers(), ProviderMode::Record, cache.clone())?;
    let answer = Pipeline::new(providers, config)?.ask(QUESTION)?;
    Ok((answer, cache.entries()?.len()))
}
