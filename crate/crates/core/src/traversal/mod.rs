//! The recursive question-decomposition loop.
//!
//! `traverse(q, d)` probes `q`, asks the planner for a dependency graph of
//! sub-questions, and stops there if the plan is just `q` again or the depth
//! ceiling is reached. Otherwise every step is rewritten with its
//! prerequisites' answers and traversed one level deeper, in topological
//! order, and the answer to `q` is inferred from the best passages of all
//! the contexts gathered on the way.

mod context;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use context::Context;
pub use trace::{Outcome, PlanTrace, Prediction, RewriteTrace, TraversalResult};

use crate::demos::{DemoCounts, DemoKind, DemoLibrary, DemoMode, Demonstration};
use crate::graph::{DependencyGraph, GraphError, Step, StepId, DEFAULT_MAX_STEPS};
use crate::planparse::{
    filter_outlier_steps, parse_dependency_dsl, parse_plan, reconcile_dependencies, stop_condition,
    validate_dependency_description, RawPlan, StopConfig,
};
use crate::prompts;
use crate::providers::{CompletionRequest, ProviderError, Providers};
use crate::scoring::{
    citation_frequencies, extract_statements, normalize_frequencies, score_thoughts, update_passage_score,
    NliMemo, Passage, QualityWeights, RetrievalWeights, ScoringError, Thought, VotePool,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("no usable completion for {question:?}: all {samples} samples lacked an answer")]
    ProbeFailed { question: String, samples: usize },
    #[error("planning failed for {question:?}: {reason}")]
    PlanFailed { question: String, reason: String },
    #[error("LLM call budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },
    #[error("step {step}: {source}")]
    Step {
        step: StepId,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
}

impl PipelineError {
    /// The innermost error, past any step attribution.
    pub fn root(&self) -> &PipelineError {
        match self {
            PipelineError::Step { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Knobs of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub quality: QualityWeights,
    pub retrieval: RetrievalWeights,
    /// Completions sampled per Predict call.
    pub samples: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Passages shown to the final inference.
    pub top_k: usize,
    /// Hits requested per search.
    pub retrieve_n: usize,
    pub stop: StopConfig,
    /// Extra planning attempts after the first fails validation.
    pub plan_retries: u32,
    /// Passages shown to the planner.
    pub plan_context_k: usize,
    pub max_steps: usize,
    /// LLM calls allowed per top-level question.
    pub call_budget: usize,
    pub demo_mode: DemoMode,
    pub demo_counts: DemoCounts,
    /// Seeds demonstration sampling.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            quality: QualityWeights::default(),
            retrieval: RetrievalWeights::default(),
            samples: 20,
            temperature: 0.7,
            max_tokens: 512,
            top_k: 7,
            retrieve_n: 7,
            stop: StopConfig::default(),
            plan_retries: 2,
            plan_context_k: 1,
            max_steps: DEFAULT_MAX_STEPS,
            call_budget: 200,
            demo_mode: DemoMode::Balanced,
            demo_counts: DemoCounts::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.quality.validate()?;
        self.retrieval.validate()?;
        self.stop.validate()?;
        if self.samples == 0 {
            return Err("samples must be at least 1".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("temperature must be non-negative, got {}", self.temperature));
        }
        if self.top_k == 0 || self.retrieve_n == 0 {
            return Err("top_k and retrieve_n must be at least 1".into());
        }
        if self.max_steps == 0 {
            return Err("max_steps must be at least 1".into());
        }
        if self.call_budget == 0 {
            return Err("call_budget must be at least 1".into());
        }
        Ok(())
    }
}

/// Hooks for watching a traversal. All methods default to no-ops.
pub trait Observer: Send + Sync {
    fn enter(&self, _question: &str, _depth: u32) {}
    fn step_started(&self, _step: StepId, _question: &str, _depth: u32) {}
    fn step_finished(&self, _step: StepId, _answer: &str, _depth: u32) {}
}

struct Silent;
impl Observer for Silent {}

/// Per-question state: the LLM call allowance.
struct Run {
    budget: usize,
    used: AtomicUsize,
}

impl Run {
    fn charge(&self) -> Result<(), PipelineError> {
        let prev = self.used.fetch_add(1, Ordering::SeqCst);
        if prev >= self.budget {
            return Err(PipelineError::BudgetExhausted { budget: self.budget });
        }
        Ok(())
    }
}

/// A ready-to-run question answerer: providers, configuration and
/// demonstrations.
pub struct Pipeline {
    providers: Providers,
    config: PipelineConfig,
    demos: DemoLibrary,
    observer: Box<dyn Observer>,
}

/// Answer to a top-level question and the LLM calls it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub result: TraversalResult,
    pub llm_calls: usize,
}

enum PlanError {
    Invalid(String),
    Fatal(PipelineError),
}

impl From<PipelineError> for PlanError {
    fn from(e: PipelineError) -> Self {
        PlanError::Fatal(e)
    }
}

impl From<ProviderError> for PlanError {
    fn from(e: ProviderError) -> Self {
        PlanError::Fatal(e.into())
    }
}

impl Pipeline {
    pub fn new(providers: Providers, config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate().map_err(PipelineError::Config)?;
        Ok(Self {
            providers,
            config,
            demos: DemoLibrary::builtin(),
            observer: Box::new(Silent),
        })
    }

    pub fn with_demos(mut self, demos: DemoLibrary) -> Self {
        self.demos = demos;
        self
    }

    pub fn with_observer(mut self, observer: Box<dyn Observer>) -> Self {
        self.observer = observer;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn providers(&self) -> &Providers {
        &self.providers
    }

    /// Runs the full traversal for a top-level question.
    pub fn ask(&self, question: &str) -> Result<Answer, PipelineError> {
        let run = Run {
            budget: self.config.call_budget,
            used: AtomicUsize::new(0),
        };
        let result = self.traverse(&run, question.trim(), 1)?;
        Ok(Answer {
            result,
            llm_calls: run.used.load(Ordering::SeqCst).min(run.budget),
        })
    }

    /// Probe only: one retrieval and one sampled prediction.
    pub fn probe_only(&self, question: &str) -> Result<TraversalResult, PipelineError> {
        let run = Run {
            budget: self.config.call_budget,
            used: AtomicUsize::new(0),
        };
        let (answer, confidence, context, probe) = self.probe(&run, question.trim())?;
        Ok(TraversalResult {
            question: question.trim().to_string(),
            depth: 1,
            answer,
            confidence,
            context,
            outcome: Outcome::Stopped,
            probe,
            inference: None,
            plan: None,
            children: Vec::new(),
        })
    }

    fn traverse(&self, run: &Run, question: &str, depth: u32) -> Result<TraversalResult, PipelineError> {
        debug_assert!(depth >= 1 && depth <= self.config.stop.max_depth);
        self.observer.enter(question, depth);
        let (answer, confidence, context, probe) = self.probe(run, question)?;
        let mut node = TraversalResult {
            question: question.to_string(),
            depth,
            answer,
            confidence,
            context,
            outcome: Outcome::Stopped,
            probe,
            inference: None,
            plan: None,
            children: Vec::new(),
        };
        // at the ceiling the stop test holds whatever the plan, so skip planning
        if depth >= self.config.stop.max_depth {
            return Ok(node);
        }
        let mut plan = match self.plan(run, question, &node.context) {
            Ok(plan) => plan,
            Err(PipelineError::PlanFailed { reason, .. }) => {
                warn!("plan failed for {question:?}: {reason}; keeping the probe answer");
                node.outcome = Outcome::PlanFailed { reason };
                return Ok(node);
            }
            Err(e) => return Err(e),
        };
        if stop_condition(
            question,
            &plan.graph,
            depth,
            &self.config.stop,
            self.providers.embedder.as_ref(),
        )? {
            node.plan = Some(plan);
            return Ok(node);
        }
        let children = self.search(run, &mut plan, depth + 1)?;
        let child_contexts: Vec<&Context> = children.iter().map(|c| &c.context).collect();
        let (answer, confidence, context, inference) = self.infer(run, question, &node.context, &child_contexts)?;
        node.answer = answer;
        node.confidence = confidence;
        node.context = context;
        node.inference = Some(inference);
        node.outcome = Outcome::Inferred;
        node.plan = Some(plan);
        node.children = children;
        Ok(node)
    }

    fn demos_for(&self, kind: DemoKind, query: &str) -> Result<Vec<Demonstration>, ProviderError> {
        self.demos.select(
            kind,
            self.config.demo_counts.get(kind),
            self.config.demo_mode,
            query,
            self.config.seed,
            self.providers.embedder.as_ref(),
        )
    }

    fn complete_one(&self, run: &Run, req: CompletionRequest) -> Result<String, PipelineError> {
        run.charge()?;
        let out = self.providers.llm.complete(&req)?;
        out.into_iter().next().ok_or_else(|| {
            PipelineError::Provider(ProviderError::Decode {
                kind: crate::providers::ProviderKind::Llm,
                message: "empty completion list".into(),
            })
        })
    }

    fn probe(&self, run: &Run, question: &str) -> Result<(String, f64, Context, Prediction), PipelineError> {
        let hits = self.providers.retriever.retrieve(question, self.config.retrieve_n)?;
        let n = hits.len();
        let passages: Vec<Passage> = hits.iter().map(|h| Passage::from_hit(h, n, question)).collect();
        let (answer, confidence, updated, prediction) = self.predict(run, question, passages)?;
        Ok((answer, confidence, Context::new(updated), prediction))
    }

    /// Samples rationales over `passages` (in prompt order), votes, and
    /// updates the score of every passage shown.
    fn predict(
        &self,
        run: &Run,
        question: &str,
        mut passages: Vec<Passage>,
    ) -> Result<(String, f64, Vec<Passage>, Prediction), PipelineError> {
        let demos = self.demos_for(DemoKind::Predict, question)?;
        let prompt = prompts::predict_prompt(question, &passages, &demos);
        let req = CompletionRequest::user(prompt)
            .samples(self.config.samples, self.config.temperature)
            .max_tokens(self.config.max_tokens);
        run.charge()?;
        let completions = self.providers.llm.complete(&req)?;
        let mut thoughts = Vec::with_capacity(completions.len());
        for text in &completions {
            match prompts::parse_prediction(text) {
                Ok((rationale, answer)) => {
                    let statements = extract_statements(&rationale, passages.len());
                    thoughts.push(Thought::new(rationale, statements, answer));
                }
                Err(e) => debug!("dropping completion for {question:?}: {e}"),
            }
        }
        let dropped = completions.len() - thoughts.len();
        if thoughts.is_empty() {
            return Err(PipelineError::ProbeFailed {
                question: question.to_string(),
                samples: completions.len(),
            });
        }
        let nli = NliMemo::new(self.providers.nli.as_deref());
        score_thoughts(&mut thoughts, &passages, &nli, &self.config.quality)?;
        let frequencies = citation_frequencies(&thoughts, &passages, &nli)?;
        let mut pool = VotePool::new(thoughts);
        let (answer, confidence) = pool.decide()?;

        let normalized = normalize_per_batch(&passages, &frequencies);
        let shown = passages.clone();
        for (p, nu_bar) in passages.iter_mut().zip(&normalized) {
            update_passage_score(p, *nu_bar, confidence, &self.config.retrieval);
        }
        let prediction = Prediction {
            prompt: shown,
            pool,
            dropped,
            frequencies,
            normalized,
        };
        Ok((answer, confidence, passages, prediction))
    }

    fn plan(&self, run: &Run, question: &str, ctx: &Context) -> Result<PlanTrace, PipelineError> {
        let mut last = String::new();
        for attempt in 0..=self.config.plan_retries {
            match self.plan_once(run, question, ctx, attempt) {
                Ok(trace) => return Ok(trace),
                Err(PlanError::Invalid(reason)) => {
                    debug!("plan attempt {} for {question:?} rejected: {reason}", attempt + 1);
                    last = reason;
                }
                Err(PlanError::Fatal(e)) => return Err(e),
            }
        }
        Err(PipelineError::PlanFailed {
            question: question.to_string(),
            reason: last,
        })
    }

    fn plan_once(&self, run: &Run, question: &str, ctx: &Context, attempt: u32) -> Result<PlanTrace, PlanError> {
        let shown = ctx.top(self.config.plan_context_k);
        let demos = self.demos_for(DemoKind::Plan, question)?;
        let prompt = prompts::plan_prompt(question, &shown, &demos);
        // retries sample so that they can differ from the first answer
        let req = if attempt == 0 {
            CompletionRequest::user(prompt)
        } else {
            CompletionRequest::user(prompt)
                .samples(1, self.config.temperature)
                .seed(Some(attempt as u64))
        };
        let text = self.complete_one(run, req.max_tokens(self.config.max_tokens))?;
        let raw = RawPlan::from_response(&text);
        let (steps, deps) = parse_plan(&raw).map_err(|e| PlanError::Invalid(e.to_string()))?;
        let planned: BTreeSet<StepId> = steps.iter().map(|s| s.id).collect();
        let steps = filter_outlier_steps(steps);
        let kept: BTreeSet<StepId> = steps.iter().map(|s| s.id).collect();

        let mut trace = PlanTrace {
            context: prompts::render_passages(&shown),
            raw,
            reflected: None,
            description: deps.trim().to_string(),
            formal: None,
            attempts: attempt + 1,
            graph: DependencyGraph::single(question),
            rewrites: Vec::new(),
        };
        let mut edges = BTreeSet::new();
        if steps.len() > 1 {
            let plan_text = prompts::render_plan_steps(&steps);
            let demos = self.demos_for(DemoKind::SelfReflect, question)?;
            let reply = self.complete_one(
                run,
                CompletionRequest::user(prompts::self_reflect_prompt(&plan_text, &demos))
                    .max_tokens(self.config.max_tokens),
            )?;
            let reflected = prompts::parse_field(&reply, "Dependencies:");
            let description = reconcile_dependencies(&deps, &reflected).to_string();
            trace.reflected = Some(reflected);
            if !validate_dependency_description(&description) {
                return Err(PlanError::Invalid(format!(
                    "dependency description {description:?} is malformed"
                )));
            }
            if description != "None" {
                let demos = self.demos_for(DemoKind::Formalize, question)?;
                let reply = self.complete_one(
                    run,
                    CompletionRequest::user(prompts::formalize_prompt(&description, &demos))
                        .max_tokens(self.config.max_tokens),
                )?;
                let formal = prompts::parse_field(&reply, "Dependencies:");
                edges = parse_dependency_dsl(&formal).map_err(|e| PlanError::Invalid(e.to_string()))?;
                trace.formal = Some(formal);
            }
            trace.description = description;
        }
        // edges into or out of steps dropped by the outlier filter go with them
        edges.retain(|(a, b)| {
            let dropped = |s: &StepId| planned.contains(s) && !kept.contains(s);
            !dropped(a) && !dropped(b)
        });
        trace.graph = DependencyGraph::build_with_limit(steps, edges, self.config.max_steps)
            .map_err(|e: GraphError| PlanError::Invalid(e.to_string()))?;
        Ok(trace)
    }

    /// The step's question made standalone with its prerequisites' answers.
    /// Source steps are returned as they are, without an LLM call.
    fn rewrite(&self, run: &Run, step: &Step, deps: &[&Step]) -> Result<RewriteTrace, PipelineError> {
        if deps.is_empty() {
            return Ok(RewriteTrace {
                step: step.id,
                context_line: String::new(),
                question: step.question.clone(),
            });
        }
        let line = prompts::render_rewrite_context(step, deps);
        let demos = self.demos_for(DemoKind::Rewrite, &step.question)?;
        let reply = self.complete_one(
            run,
            CompletionRequest::user(prompts::rewrite_prompt(&line, &demos)).max_tokens(self.config.max_tokens),
        )?;
        let question = prompts::parse_rewrite(&reply).unwrap_or_else(|| {
            warn!("empty rewrite for step {}; keeping the original question", step.id);
            step.question.clone()
        });
        Ok(RewriteTrace {
            step: step.id,
            context_line: line,
            question,
        })
    }

    /// Traverses every step in dependency order, one level deeper.
    fn search(&self, run: &Run, plan: &mut PlanTrace, depth: u32) -> Result<Vec<TraversalResult>, PipelineError> {
        let order = plan.graph.topological_sort();
        let mut children = Vec::with_capacity(order.len());
        for id in order {
            let attribute = |e: PipelineError| PipelineError::Step {
                step: id,
                source: Box::new(e),
            };
            let rewrite = {
                let step = plan.graph.step(id).expect("sorted ids exist");
                let deps = plan.graph.in_neighbors(id).expect("sorted ids exist");
                debug_assert!(deps.iter().all(|d| d.answer.is_some()));
                self.rewrite(run, step, &deps).map_err(attribute)?
            };
            self.observer.step_started(id, &rewrite.question, depth);
            let child = self.traverse(run, &rewrite.question, depth).map_err(attribute)?;
            self.observer.step_finished(id, &child.answer, depth);
            plan.graph
                .record_answer(id, rewrite.question.clone(), child.answer.clone())
                .expect("sorted ids exist");
            plan.rewrites.push(rewrite);
            children.push(child);
        }
        Ok(children)
    }

    /// Predicts over the top passages of the question's own context merged
    /// with its children's.
    fn infer(
        &self,
        run: &Run,
        question: &str,
        own: &Context,
        children: &[&Context],
    ) -> Result<(String, f64, Context, Prediction), PipelineError> {
        let mut merged = Context::merge(std::iter::once(own).chain(children.iter().copied()));
        let shown = merged.top(self.config.top_k);
        let (answer, confidence, updated, prediction) = self.predict(run, question, shown)?;
        merged.absorb(&updated);
        Ok((answer, confidence, merged, prediction))
    }
}

/// Normalizes frequencies separately within each retrieval batch.
fn normalize_per_batch(passages: &[Passage], frequencies: &[f64]) -> Vec<f64> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in passages.iter().enumerate() {
        groups.entry(p.retrieval_batch.as_str()).or_default().push(i);
    }
    let mut out = vec![0.0; passages.len()];
    for members in groups.values() {
        let batch: Vec<f64> = members.iter().map(|&i| frequencies[i]).collect();
        for (&i, v) in members.iter().zip(normalize_frequencies(&batch)) {
            out[i] = v;
        }
    }
    out
}
