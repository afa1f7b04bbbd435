//! Parsing and validation of plan-stage LLM output.
//!
//! Three text grammars come back from the planning prompts:
//!
//! * the plan itself: `Step 1: <question> Step 2: <question> ...` followed by
//!   a `Dependencies:` block;
//! * dependency sentences: `Step 2 depends on Step 1.` or `None`;
//! * the formal arrow notation: `Step 1 -> Step 2`,
//!   `(Step 1 and Step 2) -> Step 3`, `Step 1 -> (Step 2 and Step 3)`.
//!
//! Also here: the long-step outlier filter and the recursion stop test.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DependencyGraph, Step, StepId};
use crate::providers::{Embedder, ProviderError};
use crate::text::{cosine, quantile_linear, word_count};

static STEP_LABEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bstep\s+(\d+)\s*:").unwrap());

static DEPENDENCY_FORMAT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:None|((\s*([Ss]tep [0-9]+) depends on ([Ss]tep [0-9]+)\.\s*)+))$").unwrap()
});

static DEPENDS_ON: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[Ss]tep ([0-9]+) depends on [Ss]tep ([0-9]+)\.").unwrap());

static DSL_STEP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[Ss]tep\s+([0-9]+)$").unwrap());

static DSL_JOIN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s*(?:,|\band\b|&)\s*").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanParseError {
    #[error("no \"Step N:\" labels found in plan")]
    PlanFormat,
    #[error("step {0} has no question")]
    EmptyStep(u32),
    #[error("expected step {expected}, found step {found}")]
    NonContiguousStep { expected: u32, found: u32 },
    #[error("dependency description does not match the expected format: {0:?}")]
    DependencyFormat(String),
    #[error("cannot parse dependency clause {0:?}")]
    DslSyntax(String),
}

/// The two blocks of a plan response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPlan {
    pub plan_text: String,
    pub dependency_text: String,
}

impl RawPlan {
    /// Splits a plan completion at its `Dependencies:` anchor. A leading
    /// `Plan:` label, if the model repeated it, is dropped.
    pub fn from_response(text: &str) -> Self {
        let text = text.trim();
        let text = text.strip_prefix("Plan:").unwrap_or(text);
        match text.find("Dependencies:") {
            Some(at) => Self {
                plan_text: text[..at].trim().to_string(),
                dependency_text: text[at + "Dependencies:".len()..].trim().to_string(),
            },
            None => Self {
                plan_text: text.trim().to_string(),
                dependency_text: String::new(),
            },
        }
    }
}

/// One step per `Step N:` label, numbered 1..n without gaps. The dependency
/// text is returned untouched.
pub fn parse_plan(raw: &RawPlan) -> Result<(Vec<Step>, String), PlanParseError> {
    let labels: Vec<_> = STEP_LABEL.captures_iter(&raw.plan_text).collect();
    if labels.is_empty() {
        return Err(PlanParseError::PlanFormat);
    }
    let mut steps = Vec::with_capacity(labels.len());
    for (i, caps) in labels.iter().enumerate() {
        let expected = i as u32 + 1;
        let found: u32 = caps[1].parse().unwrap_or(0);
        if found != expected {
            return Err(PlanParseError::NonContiguousStep { expected, found });
        }
        let start = caps.get(0).unwrap().end();
        let end = labels
            .get(i + 1)
            .map(|next| next.get(0).unwrap().start())
            .unwrap_or(raw.plan_text.len());
        let question = raw.plan_text[start..end].trim();
        if question.is_empty() {
            return Err(PlanParseError::EmptyStep(found));
        }
        let id = StepId::new(found).expect("found >= 1");
        steps.push(Step::new(id, question));
    }
    Ok((steps, raw.dependency_text.clone()))
}

/// Whether a dependency description is `None` or a run of
/// `Step X depends on Step Y.` sentences. Surrounding whitespace is ignored.
pub fn validate_dependency_description(text: &str) -> bool {
    DEPENDENCY_FORMAT.is_match(text.trim())
}

/// Edges `(prerequisite, dependent)` from a validated description.
pub fn parse_dependency_description(text: &str) -> Result<BTreeSet<(StepId, StepId)>, PlanParseError> {
    if !validate_dependency_description(text) {
        return Err(PlanParseError::DependencyFormat(text.to_string()));
    }
    DEPENDS_ON
        .captures_iter(text)
        .map(|caps| {
            let dependent = parse_step_number(&caps[1], text)?;
            let prerequisite = parse_step_number(&caps[2], text)?;
            Ok((prerequisite, dependent))
        })
        .collect()
}

fn parse_step_number(digits: &str, context: &str) -> Result<StepId, PlanParseError> {
    digits
        .parse::<u32>()
        .ok()
        .and_then(|n| StepId::new(n).ok())
        .ok_or_else(|| PlanParseError::DslSyntax(context.to_string()))
}

/// Edges from the arrow notation. Clauses are separated by `;` or newlines;
/// a group is a single `Step N` or a parenthesised `and`/comma list; chains
/// `A -> B -> C` expand pairwise.
pub fn parse_dependency_dsl(text: &str) -> Result<BTreeSet<(StepId, StepId)>, PlanParseError> {
    let text = text.trim();
    let text = text.strip_prefix("Dependencies:").unwrap_or(text).trim();
    if text.trim_end_matches('.').eq_ignore_ascii_case("none") {
        return Ok(BTreeSet::new());
    }
    let mut edges = BTreeSet::new();
    for clause in text.split([';', '\n']) {
        let clause = clause.trim().trim_end_matches('.').trim();
        if clause.is_empty() || clause.eq_ignore_ascii_case("none") {
            continue;
        }
        let groups = clause
            .split("->")
            .map(|g| parse_group(g).ok_or_else(|| PlanParseError::DslSyntax(clause.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if groups.len() < 2 {
            return Err(PlanParseError::DslSyntax(clause.to_string()));
        }
        for pair in groups.windows(2) {
            for &from in &pair[0] {
                for &to in &pair[1] {
                    edges.insert((from, to));
                }
            }
        }
    }
    Ok(edges)
}

fn parse_group(group: &str) -> Option<Vec<StepId>> {
    let mut g = group.trim();
    if let Some(inner) = g.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
        g = inner.trim();
    }
    if g.is_empty() || g.contains(['(', ')']) {
        return None;
    }
    DSL_JOIN
        .split(g)
        .map(|item| {
            let caps = DSL_STEP.captures(item.trim())?;
            StepId::new(caps[1].parse().ok()?).ok()
        })
        .collect()
}

/// Picks the dependency description to formalize: the self-reflection
/// answer when it is well formed, otherwise the plan's own.
pub fn reconcile_dependencies<'a>(plan_deps: &'a str, reflected: &'a str) -> &'a str {
    if validate_dependency_description(reflected) {
        reflected.trim()
    } else {
        plan_deps.trim()
    }
}

/// Drops steps whose word count lies above the upper IQR fence
/// `Q3 + 1.5 * IQR` (linear-interpolation quartiles), repeating until no
/// step is above the fence. Order is preserved and the output is never
/// empty.
pub fn filter_outlier_steps(steps: Vec<Step>) -> Vec<Step> {
    let mut kept = steps;
    loop {
        if kept.len() < 2 {
            return kept;
        }
        let mut lengths: Vec<f64> = kept.iter().map(|s| word_count(&s.question) as f64).collect();
        lengths.sort_by(|a, b| a.total_cmp(b));
        let q1 = quantile_linear(&lengths, 0.25);
        let q3 = quantile_linear(&lengths, 0.75);
        let fence = q3 + 1.5 * (q3 - q1);
        let before = kept.len();
        kept.retain(|s| word_count(&s.question) as f64 <= fence);
        if kept.len() == before {
            return kept;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopConfig {
    pub max_depth: u32,
    /// Cosine threshold above which a single-step plan counts as a restatement.
    pub similarity_threshold: f64,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            max_depth: 3,
            similarity_threshold: 0.9,
        }
    }
}

impl StopConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_depth < 1 {
            return Err("max_depth must be at least 1".into());
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err(format!(
                "similarity_threshold must lie in (0, 1], got {}",
                self.similarity_threshold
            ));
        }
        Ok(())
    }
}

/// True when `depth` has reached the ceiling, or the plan is a single step
/// whose embedding is close to the question's.
pub fn stop_condition(
    question: &str,
    graph: &DependencyGraph,
    depth: u32,
    cfg: &StopConfig,
    embedder: &dyn Embedder,
) -> Result<bool, ProviderError> {
    if depth >= cfg.max_depth {
        return Ok(true);
    }
    if graph.len() != 1 {
        return Ok(false);
    }
    let step = graph.steps().next().expect("one step");
    let a = embedder.embed(question)?;
    let b = embedder.embed(&step.question)?;
    Ok(cosine(&a, &b) >= cfg.similarity_threshold)
}
