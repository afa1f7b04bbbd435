use serde::{Deserialize, Serialize};

use super::Context;
use crate::graph::{dot_escape, truncate_label, DependencyGraph, StepId};
use crate::planparse::RawPlan;
use crate::scoring::{Passage, VotePool};

/// How a traversal node produced its answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// The stop test held; the probe answer stands.
    Stopped,
    /// Planning failed after all retries; the probe answer stands.
    PlanFailed { reason: String },
    /// Sub-questions were searched and the answer inferred from all contexts.
    Inferred,
}

/// One sampled Predict call: the passages shown, the votes, and the citation
/// statistics that drove the score updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Passages in prompt order, with the scores they had when shown.
    pub prompt: Vec<Passage>,
    pub pool: VotePool,
    /// Completions discarded for lacking an answer.
    pub dropped: usize,
    /// Weighted citation frequency per prompt passage.
    pub frequencies: Vec<f64>,
    /// Frequencies normalized within each retrieval batch.
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteTrace {
    pub step: StepId,
    /// Empty when the step had no prerequisites and no prompt was sent.
    pub context_line: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTrace {
    /// Rendered passage block shown to the planner.
    pub context: String,
    pub raw: RawPlan,
    pub reflected: Option<String>,
    /// Dependency sentences that were formalized.
    pub description: String,
    pub formal: Option<String>,
    /// Attempts used, including the successful one.
    pub attempts: u32,
    /// The plan with each step's searched question and answer filled in.
    pub graph: DependencyGraph,
    pub rewrites: Vec<RewriteTrace>,
}

/// Answer, confidence and scored context for one question, plus the record
/// of how they were reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalResult {
    pub question: String,
    pub depth: u32,
    pub answer: String,
    pub confidence: f64,
    pub context: Context,
    pub outcome: Outcome,
    /// The probe that opened this node.
    pub probe: Prediction,
    /// The final inference, when sub-questions were searched.
    pub inference: Option<Prediction>,
    pub plan: Option<PlanTrace>,
    /// One result per plan step, in search order.
    pub children: Vec<TraversalResult>,
}

impl TraversalResult {
    /// Prediction whose vote produced `answer`.
    pub fn final_prediction(&self) -> &Prediction {
        self.inference.as_ref().unwrap_or(&self.probe)
    }

    /// Deepest depth reached anywhere below and including this node.
    pub fn max_depth(&self) -> u32 {
        self.children.iter().map(Self::max_depth).fold(self.depth, u32::max)
    }

    /// Number of nodes in the traversal tree.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Self::node_count).sum::<usize>()
    }

    /// One line per node, indented by depth.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        self.summarize(&mut lines, None);
        lines
    }

    fn summarize(&self, lines: &mut Vec<String>, step: Option<StepId>) {
        let indent = "  ".repeat(self.depth.saturating_sub(1) as usize);
        let label = step.map(|s| format!("Step {s}: ")).unwrap_or_default();
        let how = match &self.outcome {
            Outcome::Stopped => "stopped".to_string(),
            Outcome::PlanFailed { reason } => format!("plan failed: {reason}"),
            Outcome::Inferred => format!("inferred from {} steps", self.children.len()),
        };
        lines.push(format!(
            "{indent}[depth {}] {label}{} => {} (CI {:.3}; {how})",
            self.depth, self.question, self.answer, self.confidence
        ));
        let order: Vec<StepId> = self
            .plan
            .as_ref()
            .map(|p| p.graph.topological_sort())
            .unwrap_or_default();
        for (i, child) in self.children.iter().enumerate() {
            child.summarize(lines, order.get(i).copied());
        }
    }

    /// Graphviz rendering of the whole hierarchy: each planned node gets a
    /// cluster holding its steps, and each step links to its own sub-plan.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph hgot {\n  compound=true;\n  node [shape=box];\n");
        out.push_str(&format!(
            "  \"r\" [label=\"{}\\n=> {} ({:.2})\"];\n",
            dot_escape(&truncate_label(&self.question, 60)),
            dot_escape(&truncate_label(&self.answer, 40)),
            self.confidence
        ));
        self.write_dot(&mut out, "r");
        out.push_str("}\n");
        out
    }

    fn write_dot(&self, out: &mut String, node: &str) {
        let Some(plan) = &self.plan else { return };
        let prefix = format!("{node}.");
        out.push_str(&format!(
            "  subgraph \"cluster_{node}\" {{\n    label=\"depth {}\";\n",
            self.depth + 1
        ));
        plan.graph.write_dot_body(out, &prefix, "    ");
        out.push_str("  }\n");
        let order = plan.graph.topological_sort();
        for id in &order {
            out.push_str(&format!("  \"{node}\" -> \"{prefix}{id}\" [style=dashed];\n"));
        }
        for (id, child) in order.iter().zip(&self.children) {
            child.write_dot(out, &format!("{prefix}{id}"));
        }
    }
}
