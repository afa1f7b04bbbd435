//! Stub providers and brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use hgot::graph::StepId;
use hgot::providers::stub::HashingEmbedder;
use hgot::providers::{CompletionRequest, LanguageModel, ProviderError, Providers, RetrievalHit, Retriever};
use hgot::traversal::Observer;

pub const SEP: &str = "\n\n---\n\n";

/// The block after the last demonstration separator.
pub fn live_block(prompt: &str) -> &str {
    prompt.rsplit(SEP).next().unwrap_or(prompt)
}

pub fn live_question(prompt: &str) -> String {
    live_block(prompt)
        .lines()
        .find_map(|l| l.strip_prefix("Question: "))
        .unwrap_or("")
        .trim()
        .to_string()
}

/// Vote key written from scratch: case folded, whitespace collapsed,
/// trailing `.,;:!?` removed.
pub fn oracle_key(answer: &str) -> String {
    let mut words: Vec<String> = answer.split_whitespace().map(str::to_lowercase).collect();
    while let Some(last) = words.last_mut() {
        while last.ends_with(['.', ',', ';', ':', '!', '?']) {
            last.pop();
        }
        if last.is_empty() {
            words.pop();
        } else {
            break;
        }
    }
    words.join(" ")
}

/// Quadratic rescan: for every thought, the mass of all thoughts sharing
/// its key; the first thought reaching the strict maximum wins.
pub fn brute_vote(answers: &[String], rho: &[f64]) -> (String, f64) {
    let keys: Vec<String> = answers.iter().map(|a| oracle_key(a)).collect();
    let mass_of = |k: &str| -> f64 {
        let mut m = 0.0;
        for (j, kj) in keys.iter().enumerate() {
            if kj == k {
                m += rho[j];
            }
        }
        m
    };
    let mut best: Option<(usize, f64)> = None;
    for i in 0..answers.len() {
        if keys[..i].contains(&keys[i]) {
            continue;
        }
        let m = mass_of(&keys[i]);
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((i, m));
        }
    }
    let (i, m) = best.expect("non-empty pool");
    let mut total = 0.0;
    for r in rho {
        total += r;
    }
    (answers[i].trim().to_string(), m / total)
}

/// Recursive three-colour DFS over `1..=n`.
pub fn has_cycle(n: u32, edges: &BTreeSet<(u32, u32)>) -> bool {
    fn visit(u: u32, edges: &BTreeSet<(u32, u32)>, colour: &mut BTreeMap<u32, u8>) -> bool {
        colour.insert(u, 1);
        for &(a, b) in edges {
            if a != u {
                continue;
            }
            match colour.get(&b).copied().unwrap_or(0) {
                1 => return true,
                0 if visit(b, edges, colour) => return true,
                _ => {}
            }
        }
        colour.insert(u, 2);
        false
    }
    let mut colour = BTreeMap::new();
    (1..=n).any(|u| colour.get(&u).copied().unwrap_or(0) == 0 && visit(u, edges, &mut colour))
}

/// Random DAG on `1..=n`: edges only go from lower to higher ids after a
/// random relabelling, so the input order is not already topological.
pub fn random_dag(rng: &mut impl rand::Rng, n: u32, density: f64) -> BTreeSet<(u32, u32)> {
    use rand::seq::SliceRandom;
    let mut label: Vec<u32> = (1..=n).collect();
    label.shuffle(rng);
    let mut edges = BTreeSet::new();
    for i in 0..n as usize {
        for j in i + 1..n as usize {
            if rng.random_bool(density) {
                edges.insert((label[i], label[j]));
            }
        }
    }
    edges
}

pub fn sid(i: u32) -> StepId {
    StepId::new(i).unwrap()
}

fn repeat(text: &str, n: u32) -> Vec<String> {
    vec![text.to_string(); n as usize]
}

/// Three hits titled after the query.
pub struct EchoRetriever;

impl Retriever for EchoRetriever {
    fn retrieve(&self, query: &str, top_n: usize) -> Result<Vec<RetrievalHit>, ProviderError> {
        Ok((1..=3.min(top_n) as u32)
            .map(|rank| RetrievalHit {
                rank,
                title: format!("Source {rank}"),
                snippet: format!("Notes on {query}"),
                source_url: format!("https://example.org/{}/{rank}", query.len()),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// A sub-question about step `k` was probed.
    Probe(u32),
    /// Step `k` was rewritten with these prerequisite answers visible.
    Rewrite(u32, BTreeSet<u32>),
}

fn fact_of(q: &str) -> Option<u32> {
    let rest = q.split("fact ").nth(1)?;
    rest.split_whitespace().next()?.parse().ok()
}

/// Plans a fixed DAG for the top question and restatements for everything
/// below it, logging each probe and rewrite.
pub struct DagPlanner {
    pub top: String,
    pub n: u32,
    pub edges: BTreeSet<(u32, u32)>,
    pub log: Mutex<Vec<Event>>,
    pub calls: AtomicUsize,
}

impl DagPlanner {
    pub fn new(case: usize, n: u32, edges: BTreeSet<(u32, u32)>) -> Self {
        Self {
            top: format!("Which combined outcome follows for scenario {case}?"),
            n,
            edges,
            log: Mutex::new(Vec::new()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn step_question(&self, k: u32) -> String {
        format!("What is fact {k} of the record?")
    }

    pub fn description(&self) -> String {
        if self.edges.is_empty() {
            return "None".into();
        }
        self.edges
            .iter()
            .map(|(a, b)| format!("Step {b} depends on Step {a}."))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// LLM calls the traversal should make with max depth 3.
    pub fn expected_calls(&self) -> usize {
        let with_deps = (1..=self.n).filter(|k| self.edges.iter().any(|e| e.1 == *k)).count();
        3 + usize::from(self.n > 1) + usize::from(self.n > 1 && !self.edges.is_empty()) + with_deps + 2 * self.n as usize
    }
}

impl LanguageModel for DagPlanner {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let prompt = req.prompt_text();
        let block = live_block(&prompt);
        let out = if prompt.starts_with("Answer questions with short factoid answers.") {
            let q = live_question(&prompt);
            if q == self.top {
                repeat("The parts combine [1].\n\nAnswer: combined", req.n)
            } else {
                let k = fact_of(&q).expect("sub-question names its fact");
                self.log.lock().unwrap().push(Event::Probe(k));
                repeat(&format!("Fact {k} is recorded [1][2].\n\nAnswer: value {k}"), req.n)
            }
        } else if prompt.starts_with("Sketch a plan") {
            let q = live_question(&prompt);
            if q == self.top {
                let steps: Vec<String> = (1..=self.n)
                    .map(|k| format!("Step {k}: {}", self.step_question(k)))
                    .collect();
                vec![format!("{}\n\nDependencies: {}", steps.join(" "), self.description())]
            } else {
                vec![format!("Step 1: {q}\n\nDependencies: None")]
            }
        } else if prompt.starts_with("Highlight interdependencies") {
            vec![self.description()]
        } else if prompt.starts_with("Express the dependencies") {
            let clauses: Vec<String> = self.edges.iter().map(|(a, b)| format!("Step {a} -> Step {b}")).collect();
            vec![clauses.join("; ")]
        } else if prompt.starts_with("Rewrite the last question") {
            let target = block.rsplit("Step ").next().unwrap_or("");
            let k: u32 = target.split(':').next().unwrap_or("").trim().parse().expect("target step id");
            let seen: BTreeSet<u32> = (1..=self.n)
                .filter(|a| block.contains(&format!("ANSWER: value {a}.")))
                .collect();
            self.log.lock().unwrap().push(Event::Rewrite(k, seen));
            vec![format!("What is fact {k} of the record given its prerequisites?")]
        } else {
            return Err(ProviderError::Transport {
                kind: hgot::providers::ProviderKind::Llm,
                message: "unexpected prompt".into(),
            });
        };
        Ok(out)
    }
}

/// Always answers with a two-step chained plan, so only the depth ceiling
/// and the call budget can end a traversal.
#[derive(Default)]
pub struct AdversarialPlanner {
    pub calls: AtomicUsize,
}

impl LanguageModel for AdversarialPlanner {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let prompt = req.prompt_text();
        let block = live_block(&prompt);
        let out = if prompt.starts_with("Answer questions with short factoid answers.") {
            repeat("Something holds [1].\n\nAnswer: something", req.n)
        } else if prompt.starts_with("Sketch a plan") {
            let q = live_question(&prompt);
            let q = q.trim_end_matches('?');
            vec![format!(
                "Step 1: What is the first part of {q}? Step 2: What is the second part of {q}?\n\nDependencies: Step 2 depends on Step 1."
            )]
        } else if prompt.starts_with("Highlight interdependencies") {
            vec!["Step 2 depends on Step 1.".into()]
        } else if prompt.starts_with("Express the dependencies") {
            vec!["Step 1 -> Step 2".into()]
        } else if prompt.starts_with("Rewrite the last question") {
            let target = block.rsplit("Step 2: ").next().unwrap_or("").lines().next().unwrap_or("");
            vec![target.trim().to_string()]
        } else {
            return Err(ProviderError::Transport {
                kind: hgot::providers::ProviderKind::Llm,
                message: "unexpected prompt".into(),
            });
        };
        Ok(out)
    }
}

/// LLM calls for a node at `depth` under the adversarial planner.
pub fn adversarial_calls(depth: u32, max_depth: u32) -> usize {
    if depth >= max_depth {
        1
    } else {
        // probe, plan, reflect, formalize, one rewrite, infer, two children
        6 + 2 * adversarial_calls(depth + 1, max_depth)
    }
}

pub fn stub_providers(llm: Arc<dyn LanguageModel>) -> Providers {
    Providers::new(llm, Arc::new(EchoRetriever), Arc::new(HashingEmbedder::default()))
}

/// Records step start and finish order.
#[derive(Default, Clone)]
pub struct Recorder(pub Arc<Mutex<Vec<(bool, u32, u32)>>>);

impl Observer for Recorder {
    fn step_started(&self, step: StepId, _question: &str, depth: u32) {
        self.0.lock().unwrap().push((true, step.index(), depth));
    }
    fn step_finished(&self, step: StepId, _answer: &str, depth: u32) {
        self.0.lock().unwrap().push((false, step.index(), depth));
    }
}
