//! Prompt templates for the five LLM stages and parsers for their replies.
//!
//! Every prompt has the same layout: an instruction line, a
//! `Follow the following format.` block describing the fields, zero or more
//! filled-in demonstrations, then the live input with its last field left
//! open. Blocks are separated by `---` lines.

use thiserror::Error;

use crate::demos::{DemoKind, Demonstration};
use crate::graph::{DependencyGraph, Step};
use crate::scoring::Passage;

pub const COT_LEAD: &str = "Let's think step by step.";

const PLAN_INSTRUCTION: &str = "Sketch a plan to answer the following question with the provided context. List only the essential steps which can be answered by search engines. Express each step as a standalone search question. Highlight interdependencies if any. Higher number steps can depend on lower number steps, while the reverse is not possible.";

const SELF_REFLECT_INSTRUCTION: &str = "Highlight interdependencies among the steps below if any. Higher number steps can depend on lower number steps, while the reverse is not possible.";

const FORMALIZE_INSTRUCTION: &str = "Express the dependencies in formal language by giving the descriptions below.";

const REWRITE_INSTRUCTION: &str = "Rewrite the last question in a standalone manner by giving the answers to previous questions. Do not consider answers that were not specified. Only show the last question after the rewrite.";

const PREDICT_INSTRUCTION: &str = "Answer questions with short factoid answers.";

const CONTEXT_FIELD: &str =
    "Context:\n${sources that may contain relevant content. e.g., [1] Passage 1. [2] Passage 2. [3] Passage 3.}";

const QUESTION_FIELD: &str = "Question: ${the question to be answered}";

const PLAN_FIELDS: &str = "Plan:\nStep 1: ${a standalone search question. e.g., ...?} Step 2: ${a standalone search question. e.g., ...?} ... Step n: ${a standalone search question. e.g., ...?}\n\nDependencies: ${interdependencies among multiple steps. e.g., Step ... depends on Step ... .}";

const FORMALIZE_FIELDS: &str = "Descriptions: ${descriptions of dependencies}\nDependencies: ${e.g., If Step 2 depends on Step 1, then write Step 1 -> Step 2; If Step 2 and Step 3 depend on Step 1, then write Step 1 -> (Step 2 and Step 3); If Step 3 depends on Step 1 and Step 2, then write (Step 1 and Step 2) -> Step 3}";

const REWRITE_FIELDS: &str =
    "Context:\n${previous questions and answers}\n\nRewrite: ${the last question after the rewrite}";

const PREDICT_RATIONALE_FIELD: &str = "Rationale: Let's think step by step. ${a step-by-step deduction that identifies the correct response, which will be provided below. Every statement in the \"Rationale\" section should be attributable to the passages provided in the \"Context\" section. e.g., ...[1][2].}";

const PREDICT_ANSWER_FIELD: &str = "Answer: ${a short factoid answer, often between 1 and 5 words}";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponseError {
    #[error("completion has no \"Answer:\" field")]
    MissingAnswer,
    #[error("completion has an empty answer")]
    EmptyAnswer,
}

fn assemble(instruction: &str, fields: &str, demos: &[Demonstration], live: &str) -> String {
    let mut out = format!("{instruction}\n\n---\n\nFollow the following format.\n\n{fields}\n\n---\n\n");
    for d in demos {
        out.push_str(&render_demo(d));
        out.push_str("\n\n---\n\n");
    }
    out.push_str(live);
    out
}

/// Numbered passage block. A lone passage is shown without a number and an
/// empty context as `N/A`.
pub fn render_passages(passages: &[Passage]) -> String {
    match passages {
        [] => "N/A".to_string(),
        [one] => one.prompt_text(),
        many => many
            .iter()
            .enumerate()
            .map(|(i, p)| format!("[{}] {}", i + 1, p.prompt_text()))
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

/// `Step 1: q Step 2: q ...` on one line.
pub fn render_plan_steps<'a>(steps: impl IntoIterator<Item = &'a Step>) -> String {
    steps
        .into_iter()
        .map(|s| format!("Step {}: {}", s.id, s.question))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Context line of a rewrite prompt: each answered prerequisite, then the
/// target step's question.
pub fn render_rewrite_context(target: &Step, deps: &[&Step]) -> String {
    let mut parts: Vec<String> = deps
        .iter()
        .map(|d| {
            let answer = d.answer.as_deref().unwrap_or("").trim();
            let answer = answer.strip_suffix('.').unwrap_or(answer);
            format!("Step {}: {} ANSWER: {}.", d.id, d.question, answer)
        })
        .collect();
    parts.push(format!("Step {}: {}", target.id, target.question));
    parts.join(" ")
}

pub fn render_demo(d: &Demonstration) -> String {
    match d.kind {
        DemoKind::Predict => format!(
            "Context:\n{}\n\nQuestion: {}\n\nRationale: {COT_LEAD} {}\n\nAnswer: {}",
            d.context, d.example.question, d.rationale, d.answer
        ),
        DemoKind::Plan => format!(
            "Context:\n{}\n\nQuestion: {}\n\nPlan:\n{}\n\nDependencies: {}",
            d.context, d.example.question, d.rationale, d.answer
        ),
        DemoKind::SelfReflect => format!("Plan:\n{}\n\nDependencies: {}", d.rationale, d.answer),
        DemoKind::Formalize => format!("Descriptions: {}\nDependencies: {}", d.rationale, d.answer),
        DemoKind::Rewrite => format!("Context:\n{}\n\nRewrite: {}", d.context, d.answer),
    }
}

pub fn plan_prompt(question: &str, context: &[Passage], demos: &[Demonstration]) -> String {
    let fields = format!("{CONTEXT_FIELD}\n\n{QUESTION_FIELD}\n\n{PLAN_FIELDS}");
    let live = format!("Context:\n{}\n\nQuestion: {question}\n\nPlan:", render_passages(context));
    assemble(PLAN_INSTRUCTION, &fields, demos, &live)
}

pub fn self_reflect_prompt(plan_text: &str, demos: &[Demonstration]) -> String {
    let live = format!("Plan:\n{plan_text}\n\nDependencies:");
    assemble(SELF_REFLECT_INSTRUCTION, PLAN_FIELDS, demos, &live)
}

pub fn formalize_prompt(description: &str, demos: &[Demonstration]) -> String {
    let live = format!("Descriptions: {description}\nDependencies:");
    assemble(FORMALIZE_INSTRUCTION, FORMALIZE_FIELDS, demos, &live)
}

pub fn rewrite_prompt(context_line: &str, demos: &[Demonstration]) -> String {
    let live = format!("Context:\n{context_line}\n\nRewrite:");
    assemble(REWRITE_INSTRUCTION, REWRITE_FIELDS, demos, &live)
}

pub fn predict_prompt(question: &str, context: &[Passage], demos: &[Demonstration]) -> String {
    let fields =
        format!("{CONTEXT_FIELD}\n\n{QUESTION_FIELD}\n\n{PREDICT_RATIONALE_FIELD}\n\n{PREDICT_ANSWER_FIELD}");
    let live = format!(
        "Context:\n{}\n\nQuestion: {question}\n\nRationale: {COT_LEAD}",
        render_passages(context)
    );
    assemble(PREDICT_INSTRUCTION, &fields, demos, &live)
}

/// Splits a Predict completion into rationale and answer. The answer is the
/// text after the last `Answer:` label; a repeated `Rationale:` label or
/// chain-of-thought lead-in is removed from the rationale.
pub fn parse_prediction(completion: &str) -> Result<(String, String), ResponseError> {
    let at = completion.rfind("Answer:").ok_or(ResponseError::MissingAnswer)?;
    let answer = completion[at + "Answer:".len()..]
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .to_string();
    if answer.is_empty() {
        return Err(ResponseError::EmptyAnswer);
    }
    let mut rationale = completion[..at].trim();
    rationale = rationale.strip_prefix("Rationale:").unwrap_or(rationale).trim_start();
    rationale = rationale.strip_prefix(COT_LEAD).unwrap_or(rationale).trim();
    Ok((rationale.to_string(), answer))
}

/// First non-empty line of a Rewrite completion, without a repeated
/// `Rewrite:` label. `None` if the completion is blank.
pub fn parse_rewrite(completion: &str) -> Option<String> {
    let text = completion.trim();
    let text = text.strip_prefix("Rewrite:").unwrap_or(text);
    text.lines().map(str::trim).find(|l| !l.is_empty()).map(str::to_string)
}

/// First line of a one-field completion (self-reflect, formalize) with
/// an optional repeated label removed, keeping later lines for multi-clause
/// output.
pub fn parse_field(completion: &str, label: &str) -> String {
    let text = completion.trim();
    text.strip_prefix(label).unwrap_or(text).trim().to_string()
}

/// Plan text of a graph in prompt form, for self-reflection.
pub fn render_graph_steps(graph: &DependencyGraph) -> String {
    render_plan_steps(graph.steps())
}
