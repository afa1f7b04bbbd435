//! Few-shot demonstrations: formats, validation, selection and storage.

pub mod annotate;
mod builtin;

pub use annotate::{annotate, demos_from_trace, Annotation, Rejection};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planparse::{parse_dependency_dsl, validate_dependency_description, RawPlan};
use crate::providers::{Embedder, ProviderError};
use crate::scoring::extract_statements;
use crate::text::{canonical_answer, cosine};

/// Sentence format a cited rationale must follow: every sentence ends with
/// its markers and then a period.
static CITED_SENTENCES: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([^\[\.]+(\[[0-9]+\])*\.)+$").unwrap());

static MARKER_GROUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\[[0-9]+\])+").unwrap());

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("cannot bring citation marks into sentence-final form: {0:?}")]
    UnfixableFormat(String),
    #[error("{kind} demonstration fails validation: {reason}")]
    Invalid { kind: DemoKind, reason: String },
    #[error("demonstration store {path}: {message}")]
    Store { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoKind {
    Predict,
    Plan,
    Rewrite,
    SelfReflect,
    Formalize,
}

impl DemoKind {
    pub const ALL: [DemoKind; 5] = [
        DemoKind::Predict,
        DemoKind::Plan,
        DemoKind::Rewrite,
        DemoKind::SelfReflect,
        DemoKind::Formalize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DemoKind::Predict => "predict",
            DemoKind::Plan => "plan",
            DemoKind::Rewrite => "rewrite",
            DemoKind::SelfReflect => "self_reflect",
            DemoKind::Formalize => "formalize",
        }
    }
}

impl std::fmt::Display for DemoKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub id: String,
    pub question: String,
    pub gold_answer: String,
    /// Label used for balanced sampling; the canonical gold answer when absent.
    #[serde(default)]
    pub answer_class: Option<String>,
}

impl TrainingExample {
    pub fn class(&self) -> String {
        self.answer_class
            .clone()
            .unwrap_or_else(|| canonical_answer(&self.gold_answer))
    }
}

/// A filled-in prompt block. Field use depends on `kind`:
///
/// | kind | context | rationale | answer |
/// |---|---|---|---|
/// | predict | passage block | cited rationale | answer |
/// | plan | passage block | `Step 1: ...` text | dependency sentences |
/// | self_reflect | unused | `Step 1: ...` text | dependency sentences |
/// | formalize | unused | dependency sentences | arrow notation |
/// | rewrite | `Step k: q ANSWER: a.` line | unused | rewritten question |
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub kind: DemoKind,
    pub example: TrainingExample,
    pub context: String,
    pub rationale: String,
    pub answer: String,
}

impl Demonstration {
    /// Checks the block against its stage's grammar.
    pub fn validate(&self) -> Result<(), DemoError> {
        let fail = |reason: &str| {
            Err(DemoError::Invalid {
                kind: self.kind,
                reason: reason.to_string(),
            })
        };
        if self.answer.trim().is_empty() {
            return fail("empty answer");
        }
        match self.kind {
            DemoKind::Predict => {
                if !CITED_SENTENCES.is_match(&self.rationale) {
                    return fail("rationale is not in sentence-final citation form");
                }
            }
            DemoKind::Plan | DemoKind::SelfReflect => {
                let raw = RawPlan {
                    plan_text: self.rationale.clone(),
                    dependency_text: self.answer.clone(),
                };
                if let Err(e) = crate::planparse::parse_plan(&raw) {
                    return fail(&e.to_string());
                }
                if !validate_dependency_description(&self.answer) {
                    return fail("dependency description does not match the sentence format");
                }
            }
            DemoKind::Formalize => {
                if !validate_dependency_description(&self.rationale) {
                    return fail("description does not match the sentence format");
                }
                if let Err(e) = parse_dependency_dsl(&self.answer) {
                    return fail(&e.to_string());
                }
            }
            DemoKind::Rewrite => {
                if self.context.trim().is_empty() || self.answer.contains('\n') {
                    return fail("rewrite needs a context line and a single-line question");
                }
            }
        }
        Ok(())
    }
}

/// Whether a rationale is already in sentence-final citation form.
pub fn is_normalized_rationale(text: &str) -> bool {
    CITED_SENTENCES.is_match(text)
}

/// Moves every citation-marker group to the end of its sentence, just before
/// the period, and terminates the last sentence. Text already in that form is
/// returned unchanged.
pub fn normalize_citation_marks(text: &str) -> Result<String, DemoError> {
    if CITED_SENTENCES.is_match(text) {
        return Ok(text.to_string());
    }
    let unfixable = || DemoError::UnfixableFormat(text.to_string());
    if MARKER_GROUP.replace_all(text, "").trim().is_empty() {
        // nothing for the markers to attach to
        return Err(unfixable());
    }
    let statements = extract_statements(text, usize::MAX);
    if statements.is_empty() {
        return Err(unfixable());
    }
    let mut sentences = Vec::with_capacity(statements.len());
    for s in &statements {
        if s.text.contains(['[', ']', '.']) {
            return Err(unfixable());
        }
        let markers: String = s
            .citations
            .iter()
            .chain(&s.invalid_citations)
            .map(|i| format!("[{i}]"))
            .collect();
        if markers.is_empty() {
            sentences.push(format!("{}.", s.text));
        } else {
            sentences.push(format!("{} {markers}.", s.text));
        }
    }
    let out = sentences.join(" ");
    if CITED_SENTENCES.is_match(&out) {
        Ok(out)
    } else {
        Err(unfixable())
    }
}

/// Up to `k` demonstrations drawn so that answer classes are represented as
/// evenly as possible. Classes take turns in a seeded random order, each
/// contributing a seeded random member per turn. The result keeps pool order.
pub fn select_balanced(pool: &[Demonstration], k: usize, seed: u64) -> Vec<Demonstration> {
    if k >= pool.len() {
        return pool.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, d) in pool.iter().enumerate() {
        classes.entry(d.example.class()).or_default().push(i);
    }
    let mut queues: Vec<Vec<usize>> = classes.into_values().collect();
    for q in queues.iter_mut() {
        q.shuffle(&mut rng);
    }
    queues.shuffle(&mut rng);
    let mut chosen = Vec::with_capacity(k);
    while chosen.len() < k {
        for q in queues.iter_mut() {
            if chosen.len() == k {
                break;
            }
            if let Some(i) = q.pop() {
                chosen.push(i);
            }
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| pool[i].clone()).collect()
}

/// The `k` demonstrations whose questions are most similar to `query`,
/// most similar first; equal similarities keep pool order.
pub fn select_knn(
    pool: &[Demonstration],
    query: &str,
    k: usize,
    embedder: &dyn Embedder,
) -> Result<Vec<Demonstration>, ProviderError> {
    let q = embedder.embed(query)?;
    let mut scored = Vec::with_capacity(pool.len());
    for (i, d) in pool.iter().enumerate() {
        scored.push((cosine(&q, &embedder.embed(&d.example.question)?), i));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(k).map(|(_, i)| pool[i].clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoMode {
    #[default]
    Balanced,
    Knn,
}

impl std::str::FromStr for DemoMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "balanced" | "sampling" => Ok(Self::Balanced),
            "knn" => Ok(Self::Knn),
            other => Err(format!("unknown demo mode {other:?} (expected balanced or knn)")),
        }
    }
}

/// Number of demonstrations per prompt stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoCounts {
    pub predict: usize,
    pub plan: usize,
    pub rewrite: usize,
    pub self_reflect: usize,
    pub formalize: usize,
}

impl Default for DemoCounts {
    fn default() -> Self {
        Self {
            predict: 3,
            plan: 2,
            rewrite: 2,
            self_reflect: 2,
            formalize: 2,
        }
    }
}

impl DemoCounts {
    pub fn get(&self, kind: DemoKind) -> usize {
        match kind {
            DemoKind::Predict => self.predict,
            DemoKind::Plan => self.plan,
            DemoKind::Rewrite => self.rewrite,
            DemoKind::SelfReflect => self.self_reflect,
            DemoKind::Formalize => self.formalize,
        }
    }
}

/// Demonstration pools for every stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoLibrary {
    pub predict: Vec<Demonstration>,
    pub plan: Vec<Demonstration>,
    pub rewrite: Vec<Demonstration>,
    pub self_reflect: Vec<Demonstration>,
    pub formalize: Vec<Demonstration>,
}

impl DemoLibrary {
    /// The hand-written demonstrations shipped with the crate.
    pub fn builtin() -> Self {
        Self {
            predict: builtin::predict(),
            plan: builtin::plan(),
            rewrite: builtin::rewrite(),
            self_reflect: builtin::self_reflect(),
            formalize: Vec::new(),
        }
    }

    pub fn pool(&self, kind: DemoKind) -> &[Demonstration] {
        match kind {
            DemoKind::Predict => &self.predict,
            DemoKind::Plan => &self.plan,
            DemoKind::Rewrite => &self.rewrite,
            DemoKind::SelfReflect => &self.self_reflect,
            DemoKind::Formalize => &self.formalize,
        }
    }

    /// Replaces each pool that `other` fills; empty pools in `other` keep ours.
    pub fn overlay(mut self, other: DemoLibrary) -> Self {
        let slots = [
            (&mut self.predict, other.predict),
            (&mut self.plan, other.plan),
            (&mut self.rewrite, other.rewrite),
            (&mut self.self_reflect, other.self_reflect),
            (&mut self.formalize, other.formalize),
        ];
        for (mine, theirs) in slots {
            if !theirs.is_empty() {
                *mine = theirs;
            }
        }
        self
    }

    pub fn push(&mut self, demo: Demonstration) {
        match demo.kind {
            DemoKind::Predict => self.predict.push(demo),
            DemoKind::Plan => self.plan.push(demo),
            DemoKind::Rewrite => self.rewrite.push(demo),
            DemoKind::SelfReflect => self.self_reflect.push(demo),
            DemoKind::Formalize => self.formalize.push(demo),
        }
    }

    pub fn len(&self) -> usize {
        DemoKind::ALL.iter().map(|k| self.pool(*k).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Demonstration> {
        DemoKind::ALL.into_iter().flat_map(move |k| self.pool(k).iter())
    }

    /// Demonstrations for one prompt.
    pub fn select(
        &self,
        kind: DemoKind,
        k: usize,
        mode: DemoMode,
        query: &str,
        seed: u64,
        embedder: &dyn Embedder,
    ) -> Result<Vec<Demonstration>, ProviderError> {
        let pool = self.pool(kind);
        if k == 0 || pool.is_empty() {
            return Ok(Vec::new());
        }
        match mode {
            DemoMode::Balanced => Ok(select_balanced(pool, k, seed)),
            DemoMode::Knn => select_knn(pool, query, k, embedder),
        }
    }

    /// Loads every `*.json` file of a demonstration store, in file-name order.
    pub fn load(dir: &Path) -> Result<Self, DemoError> {
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut lib = Self::default();
        for path in paths {
            let text = fs::read_to_string(&path)?;
            let file: StoredDemo = serde_json::from_str(&text).map_err(|e| DemoError::Store {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            lib.push(file.demo);
        }
        Ok(lib)
    }

    /// Writes one file per demonstration, named `<kind>-<nnnn>-<example id>.json`.
    pub fn save(&self, dir: &Path) -> Result<usize, DemoError> {
        fs::create_dir_all(dir)?;
        let mut written = 0;
        for kind in DemoKind::ALL {
            for (i, demo) in self.pool(kind).iter().enumerate() {
                let name = format!("{}-{:04}-{}.json", kind, i, file_stem(&demo.example.id));
                let file = StoredDemo {
                    source_example_id: demo.example.id.clone(),
                    rendered: crate::prompts::render_demo(demo),
                    demo: demo.clone(),
                };
                let text = serde_json::to_string_pretty(&file).expect("demonstration serializes");
                fs::write(dir.join(name), text + "\n")?;
                written += 1;
            }
        }
        Ok(written)
    }
}

#[derive(Serialize, Deserialize)]
struct StoredDemo {
    source_example_id: String,
    #[serde(flatten)]
    demo: Demonstration,
    rendered: String,
}

fn file_stem(id: &str) -> String {
    let stem: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .take(48)
        .collect();
    if stem.is_empty() {
        "example".into()
    } else {
        stem
    }
}
