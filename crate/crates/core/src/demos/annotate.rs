//! Builds demonstrations by running the pipeline over labelled examples and
//! keeping the traces of correctly answered ones.

use serde::{Deserialize, Serialize};

use super::{normalize_citation_marks, DemoError, DemoKind, DemoLibrary, Demonstration, TrainingExample};
use crate::eval::exact_match;
use crate::planparse::{filter_outlier_steps, parse_plan};
use crate::prompts::{render_passages, render_plan_steps};
use crate::text::canonical_answer;
use crate::traversal::{Pipeline, PipelineError, TraversalResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub example_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Annotation {
    pub library: DemoLibrary,
    /// Examples that contributed at least one demonstration.
    pub accepted: Vec<String>,
    pub rejected: Vec<Rejection>,
}

/// Runs examples in order until `limit` have been accepted.
///
/// An example is accepted when the pipeline's answer exactly matches its
/// gold answer and at least one stage block passes validation. Provider
/// and budget failures reject the example; configuration errors abort.
pub fn annotate(examples: &[TrainingExample], pipeline: &Pipeline, limit: usize) -> Result<Annotation, DemoError> {
    let mut out = Annotation::default();
    for ex in examples {
        if out.accepted.len() >= limit {
            break;
        }
        let reject = |out: &mut Annotation, reason: String| {
            out.rejected.push(Rejection { example_id: ex.id.clone(), reason })
        };
        let answer = match pipeline.ask(&ex.question) {
            Ok(a) => a,
            Err(PipelineError::Config(m)) => return Err(DemoError::Invalid { kind: DemoKind::Predict, reason: m }),
            Err(e) => {
                reject(&mut out, e.to_string());
                continue;
            }
        };
        let result = answer.result;
        if exact_match(&result.answer, std::slice::from_ref(&ex.gold_answer)) < 1.0 {
            reject(&mut out, format!("answered {:?}, gold {:?}", result.answer, ex.gold_answer));
            continue;
        }
        let demos = demos_from_trace(ex, &result);
        if demos.is_empty() {
            reject(&mut out, "no stage produced a valid block".into());
            continue;
        }
        for d in demos {
            out.library.push(d);
        }
        out.accepted.push(ex.id.clone());
    }
    Ok(out)
}

/// Every valid demonstration recoverable from one correct traversal.
pub fn demos_from_trace(ex: &TrainingExample, result: &TraversalResult) -> Vec<Demonstration> {
    let mut demos = Vec::new();
    let mut push = |kind, context: String, rationale: String, answer: String| {
        let d = Demonstration { kind, example: ex.clone(), context, rationale, answer };
        match d.validate() {
            Ok(()) => demos.push(d),
            Err(e) => log::debug!("example {}: {e}", ex.id),
        }
    };

    let pred = result.final_prediction();
    let chosen = canonical_answer(&result.answer);
    if let Some(t) = pred.pool.thoughts.iter().find(|t| canonical_answer(&t.answer) == chosen) {
        if let Ok(rationale) = normalize_citation_marks(t.raw.trim()) {
            push(DemoKind::Predict, render_passages(&pred.prompt), rationale, t.answer.trim().to_string());
        }
    }

    if let Some(plan) = &result.plan {
        if let Ok((steps, _)) = parse_plan(&plan.raw) {
            let steps = filter_outlier_steps(steps);
            if steps.len() > 1 {
                let plan_text = render_plan_steps(&steps);
                let description = plan.description.clone();
                push(DemoKind::Plan, plan.context.clone(), plan_text.clone(), description.clone());
                push(DemoKind::SelfReflect, String::new(), plan_text, description.clone());
                if let Some(formal) = &plan.formal {
                    push(DemoKind::Formalize, String::new(), description, formal.trim().to_string());
                }
            }
        }
        for rw in plan.rewrites.iter().filter(|r| !r.context_line.is_empty()) {
            push(DemoKind::Rewrite, rw.context_line.clone(), String::new(), rw.question.clone());
        }
    }
    demos
}
