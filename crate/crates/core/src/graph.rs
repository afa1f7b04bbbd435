//! Dependency graph of sub-query steps.
//!
//! A plan is a set of numbered steps plus "to depends on from" edges. The
//! graph is validated once at construction (unique ids, known endpoints,
//! no directed cycle) and its edge set never changes afterwards; only the
//! per-step answers are filled in while the graph is searched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ceiling on the number of steps a single plan may contain.
pub const DEFAULT_MAX_STEPS: usize = 12;

/// 1-based step number, matching the "Step N" labels of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepId(u32);

impl StepId {
    pub fn new(index: u32) -> Result<Self, GraphError> {
        if index == 0 {
            return Err(GraphError::ZeroStepId);
        }
        Ok(Self(index))
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub id: StepId,
    pub question: String,
    pub answer: Option<String>,
    /// Set once the question has been rewritten with its prerequisites' answers.
    pub rewritten: bool,
}

impl Step {
    pub fn new(id: StepId, question: impl Into<String>) -> Self {
        Self {
            id,
            question: question.into(),
            answer: None,
            rewritten: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("step ids are 1-based; 0 is not a valid step")]
    ZeroStepId,
    #[error("a dependency graph needs at least one step")]
    Empty,
    #[error("plan has {count} steps, more than the limit of {limit}")]
    TooManySteps { count: usize, limit: usize },
    #[error("duplicate step {0}")]
    DuplicateStep(StepId),
    #[error("unknown step {0}")]
    UnknownStep(StepId),
    #[error("step {0} has an empty question")]
    EmptyQuestion(StepId),
    #[error("dependency cycle through steps {0:?}")]
    Cycle(Vec<StepId>),
}

/// Validated directed acyclic graph. An edge `(from, to)` means `to` depends
/// on `from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    steps: BTreeMap<StepId, Step>,
    edges: BTreeSet<(StepId, StepId)>,
}

impl DependencyGraph {
    /// Builds a graph with the default step limit.
    pub fn build(
        steps: Vec<Step>,
        edges: impl IntoIterator<Item = (StepId, StepId)>,
    ) -> Result<Self, GraphError> {
        Self::build_with_limit(steps, edges, DEFAULT_MAX_STEPS)
    }

    pub fn build_with_limit(
        steps: Vec<Step>,
        edges: impl IntoIterator<Item = (StepId, StepId)>,
        max_steps: usize,
    ) -> Result<Self, GraphError> {
        if steps.is_empty() {
            return Err(GraphError::Empty);
        }
        if steps.len() > max_steps {
            return Err(GraphError::TooManySteps {
                count: steps.len(),
                limit: max_steps,
            });
        }
        let mut by_id = BTreeMap::new();
        for step in steps {
            if step.question.trim().is_empty() {
                return Err(GraphError::EmptyQuestion(step.id));
            }
            let id = step.id;
            if by_id.insert(id, step).is_some() {
                return Err(GraphError::DuplicateStep(id));
            }
        }
        let mut edge_set = BTreeSet::new();
        for (from, to) in edges {
            for id in [from, to] {
                if !by_id.contains_key(&id) {
                    return Err(GraphError::UnknownStep(id));
                }
            }
            if from == to {
                return Err(GraphError::Cycle(vec![from]));
            }
            edge_set.insert((from, to));
        }
        let graph = Self {
            steps: by_id,
            edges: edge_set,
        };
        graph.check_acyclic()?;
        Ok(graph)
    }

    /// Graph with a single step and no edges.
    pub fn single(question: impl Into<String>) -> Self {
        let id = StepId(1);
        let mut steps = BTreeMap::new();
        steps.insert(id, Step::new(id, question));
        Self {
            steps,
            edges: BTreeSet::new(),
        }
    }

    fn check_acyclic(&self) -> Result<(), GraphError> {
        let order = self.kahn_order();
        if order.len() == self.steps.len() {
            return Ok(());
        }
        let placed: BTreeSet<StepId> = order.into_iter().collect();
        let stuck = self
            .steps
            .keys()
            .copied()
            .filter(|id| !placed.contains(id))
            .collect();
        Err(GraphError::Cycle(stuck))
    }

    /// Kahn's algorithm with the ready set kept ordered, so ties resolve to
    /// the lowest step id. Returns fewer ids than steps iff there is a cycle.
    fn kahn_order(&self) -> Vec<StepId> {
        let mut indegree: BTreeMap<StepId, usize> = self.steps.keys().map(|&id| (id, 0)).collect();
        for &(_, to) in &self.edges {
            *indegree.get_mut(&to).expect("validated endpoint") += 1;
        }
        let mut ready: BTreeSet<StepId> = indegree
            .iter()
            .filter(|(_, &deg)| deg == 0)
            .map(|(&id, _)| id)
            .collect();
        let mut order = Vec::with_capacity(self.steps.len());
        while let Some(id) = ready.pop_first() {
            order.push(id);
            for to in self.out_ids(id) {
                let deg = indegree.get_mut(&to).expect("validated endpoint");
                *deg -= 1;
                if *deg == 0 {
                    ready.insert(to);
                }
            }
        }
        order
    }

    fn out_ids(&self, id: StepId) -> impl Iterator<Item = StepId> + '_ {
        self.edges
            .range((id, StepId(0))..=(id, StepId(u32::MAX)))
            .map(|&(_, to)| to)
    }

    /// Every edge `(u, v)` has `u` before `v`; ties go to the lower id.
    pub fn topological_sort(&self) -> Vec<StepId> {
        self.kahn_order()
    }

    /// Steps that `id` depends on, in ascending id order.
    pub fn in_neighbors(&self, id: StepId) -> Result<Vec<&Step>, GraphError> {
        if !self.steps.contains_key(&id) {
            return Err(GraphError::UnknownStep(id));
        }
        Ok(self
            .edges
            .iter()
            .filter(|&&(_, to)| to == id)
            .map(|(from, _)| &self.steps[from])
            .collect())
    }

    pub fn step(&self, id: StepId) -> Option<&Step> {
        self.steps.get(&id)
    }

    /// Steps in ascending id order.
    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.steps.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = (StepId, StepId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Records the (possibly rewritten) question a step was searched with
    /// and the answer found for it.
    pub fn record_answer(
        &mut self,
        id: StepId,
        question: String,
        answer: String,
    ) -> Result<(), GraphError> {
        let step = self.steps.get_mut(&id).ok_or(GraphError::UnknownStep(id))?;
        if step.question != question {
            step.question = question;
            step.rewritten = true;
        }
        step.answer = Some(answer);
        Ok(())
    }

    /// Graphviz digraph with node labels truncated to 60 characters.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph plan {\n  rankdir=LR;\n");
        self.write_dot_body(&mut out, "", "  ");
        out.push_str("}\n");
        out
    }

    /// Writes node and edge statements with ids prefixed by `prefix`.
    pub(crate) fn write_dot_body(&self, out: &mut String, prefix: &str, indent: &str) {
        for step in self.steps.values() {
            out.push_str(&format!(
                "{indent}\"{prefix}{}\" [label=\"{}: {}\"];\n",
                step.id,
                step.id,
                dot_escape(&truncate_label(&step.question, 60))
            ));
        }
        for (from, to) in &self.edges {
            out.push_str(&format!("{indent}\"{prefix}{from}\" -> \"{prefix}{to}\";\n"));
        }
    }
}

pub(crate) fn truncate_label(text: &str, max_chars: usize) -> String {
    let text = text.trim();
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let mut cut: String = text.chars().take(max_chars - 3).collect();
    cut.push_str("...");
    cut
}

pub(crate) fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ")
}
