//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so that the lines are always printed.
//! Exits non-zero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use hgot::demos::{is_normalized_rationale, normalize_citation_marks, DemoLibrary};
use hgot::eval::{
    self, default_grid, grid_search, stratify, DatasetKind, EvalExample, LookupEvaluator, Split,
};
use hgot::graph::{DependencyGraph, GraphError, Step};
use hgot::planparse::{parse_dependency_description, parse_dependency_dsl, validate_dependency_description};
use hgot::prompts::parse_prediction;
use hgot::scoring::{
    citation_frequencies, extract_statements, normalize_frequencies, thought_quality, update_passage_score, NliMemo,
    Passage, QualityWeights, RetrievalWeights, Thought, VotePool,
};
use hgot::transcript::{self, final_choices, CHOICES_WITHOUT_SIX, QUESTION, REWRITTEN_STEP2};
use hgot::traversal::{Outcome, Pipeline, PipelineConfig, PipelineError};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:?}, limit {limit:?}");
    Ok(took)
}

const SPELLINGS: [&str; 12] = [
    "Paris", "paris.", " PARIS ", "London", "london!", "Rome", "rome ?", "Berlin", "berlin,", "New  York", "new york.",
    "Oslo",
];

fn random_answers(rng: &mut ChaCha8Rng, m: usize) -> Vec<String> {
    // a narrow alphabet per pool makes ties and repeated keys common
    let width = rng.random_range(1..=SPELLINGS.len());
    (0..m).map(|_| SPELLINGS[rng.random_range(0..width)].to_string()).collect()
}

fn pool_of(answers: &[String], rho: &[f64]) -> VotePool {
    VotePool::new(
        answers
            .iter()
            .zip(rho)
            .map(|(a, &r)| Thought::new("", Vec::new(), a.clone()).with_quality(r))
            .collect(),
    )
}

fn vote_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ties = 0;
    for case in 0..1000 {
        let m = rng.random_range(1..=25);
        let answers = random_answers(&mut rng, m);
        let discrete = case % 2 == 0;
        let w = if discrete {
            QualityWeights::default()
        } else {
            QualityWeights::new(rng.random(), rng.random(), rng.random())
        };
        let mut rho = Vec::with_capacity(m);
        for _ in 0..m {
            let (rec, prec): (f64, f64) = if discrete {
                (rng.random_range(0..=2) as f64 / 2.0, rng.random_range(0..=2) as f64 / 2.0)
            } else {
                (rng.random(), rng.random())
            };
            let q = thought_quality(rec, prec, &w);
            ensure!(q == w.alpha + w.beta * rec + w.gamma * prec, "case {case}: quality {q}");
            rho.push(q);
        }
        if rho.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        let mut pool = pool_of(&answers, &rho);
        let (chosen, ci) = pool.decide().map_err(|e| format!("case {case}: {e}"))?;
        let (want, want_ci) = brute_vote(&answers, &rho);
        ensure!(chosen == want, "case {case}: vote {chosen:?}, oracle {want:?} over {answers:?} {rho:?}");
        ensure!((ci - want_ci).abs() <= 1e-12, "case {case}: CI {ci}, oracle {want_ci}");
        let keys: BTreeSet<String> = answers.iter().map(|a| oracle_key(a)).collect();
        let masses: Vec<f64> = keys
            .iter()
            .map(|k| answers.iter().zip(&rho).filter(|(a, _)| oracle_key(a) == *k).map(|(_, r)| r).sum())
            .collect();
        let top = masses.iter().copied().fold(f64::MIN, f64::max);
        if masses.iter().filter(|&&x| x == top).count() > 1 {
            ties += 1;
        }
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!("1000 pools, {ties} with tied maxima, {took:.2?}"))
}

fn majority_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let uniform = QualityWeights::uniform();
    for case in 0..1000 {
        let m = rng.random_range(1..=25);
        let answers = random_answers(&mut rng, m);
        let rho: Vec<f64> = (0..m).map(|_| thought_quality(rng.random(), rng.random(), &uniform)).collect();
        ensure!(rho.iter().all(|&r| r == 1.0), "case {case}: uniform quality is not 1");
        let mut counts: Vec<(String, usize, usize)> = Vec::new();
        for (i, a) in answers.iter().enumerate() {
            let k = oracle_key(a);
            match counts.iter_mut().find(|(ck, _, _)| *ck == k) {
                Some(c) => c.1 += 1,
                None => counts.push((k, 1, i)),
            }
        }
        let mut best = 0;
        for h in 1..counts.len() {
            if counts[h].1 > counts[best].1 {
                best = h;
            }
        }
        let want = answers[counts[best].2].trim().to_string();
        let want_ci = counts[best].1 as f64 / m as f64;
        let (chosen, ci) = pool_of(&answers, &rho).decide().map_err(|e| e.to_string())?;
        ensure!(chosen == want, "case {case}: {chosen:?} vs majority {want:?}");
        ensure!(ci == want_ci, "case {case}: CI {ci} vs {want_ci}");
    }
    Ok("1000 pools, exact".into())
}

fn passage_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..500 {
        let n = rng.random_range(1..=8usize);
        let m = rng.random_range(1..=25usize);
        let passages: Vec<Passage> = (0..n)
            .map(|i| Passage::new(format!("p{i}"), format!("T{i}"), "body", rng.random(), "batch"))
            .collect();
        // sentence-level citation sets per thought; index n + 1 is out of range
        let mut cites: Vec<Vec<BTreeSet<u32>>> = Vec::with_capacity(m);
        let mut thoughts = Vec::with_capacity(m);
        let mut rho = Vec::with_capacity(m);
        for _ in 0..m {
            let sentences: Vec<BTreeSet<u32>> = (0..rng.random_range(1..=4))
                .map(|_| (1..=n as u32 + 1).filter(|_| rng.random_bool(0.35)).collect())
                .collect();
            let raw: Vec<String> = sentences
                .iter()
                .enumerate()
                .map(|(s, set)| {
                    let marks: String = set.iter().map(|i| format!("[{i}]")).collect();
                    format!("Claim {s} holds {marks}.")
                })
                .collect();
            let raw = raw.join(" ");
            let r: f64 = rng.random_range(0.0..1.5);
            thoughts.push(Thought::new(raw.clone(), extract_statements(&raw, n), "a").with_quality(r));
            cites.push(sentences);
            rho.push(r);
        }
        let nli = NliMemo::new(None);
        let got = citation_frequencies(&thoughts, &passages, &nli).map_err(|e| e.to_string())?;
        let mut want = vec![0.0f64; n];
        for j in 1..=n as u32 {
            for (t, sentences) in cites.iter().enumerate() {
                for s in sentences {
                    if s.contains(&j) {
                        want[j as usize - 1] += rho[t];
                    }
                }
            }
        }
        for j in 0..n {
            ensure!((got[j] - want[j]).abs() <= 1e-12, "case {case}: nu-hat[{}] {} vs {}", j + 1, got[j], want[j]);
        }
        let top = want.iter().copied().fold(0.0, f64::max);
        let bar = normalize_frequencies(&got);
        let ci: f64 = rng.random();
        let w = RetrievalWeights::new(rng.random(), rng.random(), rng.random());
        for j in 0..n {
            let want_bar = if top > 0.0 { want[j] / top } else { 0.0 };
            ensure!((bar[j] - want_bar).abs() <= 1e-12, "case {case}: nu-bar[{}]", j + 1);
            let mut p = passages[j].clone();
            let sigma = p.score();
            let next = update_passage_score(&mut p, bar[j], ci, &w);
            ensure!(
                (next - (w.w1 * sigma + w.w2 * want_bar + w.w3 * ci)).abs() <= 1e-12,
                "case {case}: sigma update"
            );
            ensure!(p.score_history.len() == 2, "case {case}: history not appended");
            let mut fixed = passages[j].clone();
            let kept = update_passage_score(&mut fixed, bar[j], ci, &RetrievalWeights::retrieval_only());
            ensure!(kept == sigma, "case {case}: retrieval-only weights moved {sigma} to {kept}");
        }
    }
    Ok("500 instances within 1e-12, retrieval-only weights are a fixed point".into())
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/todd_boehly")
}

fn worked_example_replay() -> Check {
    let start = Instant::now();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let providers = transcript::replay_providers(&fixtures_dir()).map_err(|e| e.to_string())?;
        let pipeline = Pipeline::new(providers, PipelineConfig::default()).map_err(|e| e.to_string())?;
        // replay inners refuse live calls, so success means no network use
        let ans = pipeline.ask(QUESTION).map_err(|e| e.to_string())?;
        let r = &ans.result;
        ensure!(r.answer == "President", "answer {:?}", r.answer);
        ensure!(r.confidence == 1.0, "CI {}", r.confidence);
        ensure!(r.outcome == Outcome::Inferred, "outcome {:?}", r.outcome);
        let plan = r.plan.as_ref().ok_or("no plan")?;
        ensure!(plan.graph.len() == 2, "{} steps", plan.graph.len());
        let edges: Vec<(u32, u32)> = plan.graph.edges().map(|(a, b)| (a.index(), b.index())).collect();
        ensure!(edges == [(1, 2)], "edges {edges:?}");
        let rewrites: Vec<&str> = plan.rewrites.iter().map(|w| w.question.as_str()).collect();
        ensure!(rewrites.get(1) == Some(&REWRITTEN_STEP2), "rewrites {rewrites:?}");
        runs.push(serde_json::to_string(&ans).map_err(|e| e.to_string())?);
    }
    ensure!(runs[0] == runs[1], "two replays differ");
    let took = within(Duration::from_secs(2), start)?;
    Ok(format!("President, CI 1.0, edge (1,2), two identical replays in {took:.2?}"))
}

fn citation_counts() -> Check {
    let passages: Vec<Passage> = (1..=7).map(|i| Passage::new(format!("p{i}"), "", "x", 1.0, "q")).collect();
    let mut thoughts = Vec::new();
    let mut without_six = Vec::new();
    for (i, c) in final_choices().iter().enumerate() {
        let (rationale, answer) = parse_prediction(c).map_err(|e| format!("choice {i}: {e}"))?;
        let statements = extract_statements(&rationale, 7);
        if !statements.iter().any(|s| s.citations.contains(&6)) {
            without_six.push(i);
        }
        thoughts.push(Thought::new(rationale, statements, answer).with_quality(1.0));
    }
    ensure!(thoughts.len() == 20, "{} choices", thoughts.len());
    ensure!(without_six == CHOICES_WITHOUT_SIX, "choices without [6]: {without_six:?}");
    let freq = citation_frequencies(&thoughts, &passages, &NliMemo::new(None)).map_err(|e| e.to_string())?;
    ensure!(freq[1] == 20.0, "nu-hat([2]) = {}", freq[1]);
    ensure!(freq[5] == 16.0, "nu-hat([6]) = {}", freq[5]);
    let bar = normalize_frequencies(&freq);
    ensure!(bar[5] == 0.8, "nu-bar([6]) = {}", bar[5]);
    Ok(format!("nu-hat([2]) = {}, nu-hat([6]) = {}, nu-bar([6]) = {}", freq[1], freq[5], bar[5]))
}

fn prompt_fixture_lines(name: &str, label: &str) -> Result<Vec<String>, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/prompts").join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .filter_map(|l| l.strip_prefix(label))
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("${"))
        .map(str::to_string)
        .collect())
}

/// A normalized rationale with its marker groups moved to random word
/// boundaries inside their sentences, and sometimes no final period.
fn mutate(rng: &mut ChaCha8Rng) -> (String, Vec<BTreeSet<u32>>) {
    const WORDS: [&str; 8] = ["alpha", "beta", "gamma", "delta", "owner", "firm", "club", "sold"];
    let mut sentences = Vec::new();
    let mut marks = Vec::new();
    for _ in 0..rng.random_range(1..=4) {
        let words: Vec<&str> = (0..rng.random_range(1..=6)).map(|_| WORDS[rng.random_range(0..8)]).collect();
        let set: BTreeSet<u32> = (1..=7).filter(|_| rng.random_bool(0.3)).collect();
        let group: String = set.iter().map(|i| format!("[{i}]")).collect();
        let at = rng.random_range(1..=words.len());
        let mut parts: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        if !group.is_empty() {
            let glue = if rng.random_bool(0.5) { " " } else { "" };
            parts[at - 1] = format!("{}{glue}{group}", parts[at - 1]);
        }
        sentences.push(format!("{}.", parts.join(" ")));
        marks.push(set);
    }
    let mut text = sentences.join(" ");
    if rng.random_bool(0.3) {
        text.pop();
    }
    (text, marks)
}

fn grammar_suite() -> Check {
    let mut fixtures = 0;
    for demo in DemoLibrary::builtin().iter() {
        demo.validate().map_err(|e| format!("builtin {} demo: {e}", demo.kind.as_str()))?;
        fixtures += 1;
    }
    for name in ["plan.txt", "self_reflect.txt"] {
        for line in prompt_fixture_lines(name, "Dependencies:")? {
            ensure!(validate_dependency_description(&line), "{name}: {line:?} rejected");
            fixtures += 1;
        }
    }
    for line in prompt_fixture_lines("formalize.txt", "Descriptions:")? {
        let edges = parse_dependency_description(&line).map_err(|e| e.to_string())?;
        ensure!(!edges.is_empty(), "formalize.txt: {line:?} has no edges");
        fixtures += 1;
    }
    for ok in ["Step 2 depends on Step 1.", "None", "Step 2 depends on Step 1. Step 3 depends on Step 1."] {
        ensure!(validate_dependency_description(ok), "{ok:?} rejected");
    }
    for bad in [
        "",
        "none",
        "Step 2 depends on Step 1",
        "Step 2 relies on Step 1.",
        "Step two depends on Step 1.",
        "Step 2 depends on Step 1. And more.",
        "None. Step 2 depends on Step 1.",
    ] {
        ensure!(!validate_dependency_description(bad), "{bad:?} accepted");
    }
    let dsl: [(&str, &[(u32, u32)]); 5] = [
        ("Step 1 -> Step 2", &[(1, 2)]),
        ("Step 1 -> (Step 2 and Step 3)", &[(1, 2), (1, 3)]),
        ("(Step 1 and Step 2) -> Step 3", &[(1, 3), (2, 3)]),
        ("Step 1 -> Step 2 -> Step 3", &[(1, 2), (2, 3)]),
        ("Step 1 -> Step 3; (Step 2, Step 4) -> (Step 5 and Step 6)", &[(1, 3), (2, 5), (2, 6), (4, 5), (4, 6)]),
    ];
    for (text, want) in dsl {
        let got: Vec<(u32, u32)> = parse_dependency_dsl(text)
            .map_err(|e| format!("{text:?}: {e}"))?
            .into_iter()
            .map(|(a, b)| (a.index(), b.index()))
            .collect();
        ensure!(got == want, "{text:?} gave {got:?}");
    }
    ensure!(parse_dependency_dsl("Step 1 -> (Step 2").is_err(), "unbalanced group accepted");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..500 {
        let (text, marks) = mutate(&mut rng);
        let out = normalize_citation_marks(&text).map_err(|e| format!("case {case}: {text:?}: {e}"))?;
        ensure!(is_normalized_rationale(&out), "case {case}: {out:?} fails validation");
        let again = normalize_citation_marks(&out).map_err(|e| e.to_string())?;
        ensure!(again == out, "case {case}: not idempotent on {out:?}");
        let kept: Vec<BTreeSet<u32>> =
            extract_statements(&out, 7).iter().map(|s| s.citations.iter().copied().collect()).collect();
        ensure!(kept == marks, "case {case}: markers moved across sentences in {out:?}");
    }
    Ok(format!("{fixtures} format fixtures valid, 500 mutated rationales normalized idempotently"))
}

fn dag_properties() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cyclic = 0;
    for case in 0..500 {
        let n = rng.random_range(1..=12u32);
        let p = rng.random_range(0.0..0.3);
        let edges: BTreeSet<(u32, u32)> = (1..=n)
            .flat_map(|a| (1..=n).map(move |b| (a, b)))
            .filter(|(a, b)| a != b && rng.random_bool(p))
            .collect();
        let steps: Vec<Step> = (1..=n).map(|i| Step::new(sid(i), format!("q{i}"))).collect();
        let built = DependencyGraph::build(steps, edges.iter().map(|&(a, b)| (sid(a), sid(b))));
        match (has_cycle(n, &edges), built) {
            (true, Err(GraphError::Cycle(_))) => cyclic += 1,
            (false, Ok(g)) => {
                let order: Vec<u32> = g.topological_sort().iter().map(|s| s.index()).collect();
                let pos: BTreeMap<u32, usize> = order.iter().enumerate().map(|(i, &s)| (s, i)).collect();
                ensure!(pos.len() == n as usize && order.len() == n as usize, "case {case}: order {order:?}");
                for (a, b) in &edges {
                    ensure!(pos[a] < pos[b], "case {case}: {a} after {b} in {order:?}");
                }
            }
            (c, r) => return Err(format!("case {case}: cycle oracle {c}, build {r:?}")),
        }
    }

    let config = PipelineConfig {
        samples: 3,
        ..PipelineConfig::default()
    };
    for case in 0..500 {
        let n = rng.random_range(1..=12u32);
        let density = rng.random_range(0.0..0.5);
        let stub = Arc::new(DagPlanner::new(case, n, random_dag(&mut rng, n, density)));
        let recorder = Recorder::default();
        let pipeline = Pipeline::new(stub_providers(stub.clone()), config.clone())
            .map_err(|e| e.to_string())?
            .with_observer(Box::new(recorder.clone()));
        let ans = pipeline.ask(&stub.top).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(ans.result.answer == "combined", "case {case}: answer {:?}", ans.result.answer);
        let graph = &ans.result.plan.as_ref().ok_or("no plan")?.graph;
        let got: BTreeSet<(u32, u32)> = graph.edges().map(|(a, b)| (a.index(), b.index())).collect();
        ensure!(got == stub.edges, "case {case}: planned {:?}, built {got:?}", stub.edges);
        ensure!(
            ans.llm_calls == stub.expected_calls() && stub.calls.load(Ordering::SeqCst) == ans.llm_calls,
            "case {case}: {} calls, expected {}",
            ans.llm_calls,
            stub.expected_calls()
        );

        let log = stub.log.lock().unwrap().clone();
        let probed: Vec<u32> = log
            .iter()
            .filter_map(|e| match e {
                Event::Probe(k) => Some(*k),
                _ => None,
            })
            .collect();
        let mut sorted = probed.clone();
        sorted.sort_unstable();
        ensure!(sorted == (1..=n).collect::<Vec<_>>(), "case {case}: probes {probed:?}");
        let at = |k: u32| probed.iter().position(|&x| x == k).unwrap();
        for (a, b) in &stub.edges {
            ensure!(at(*a) < at(*b), "case {case}: step {b} probed before prerequisite {a}");
        }
        for e in &log {
            if let Event::Rewrite(k, seen) = e {
                let deps: BTreeSet<u32> = stub.edges.iter().filter(|e| e.1 == *k).map(|e| e.0).collect();
                ensure!(*seen == deps, "case {case}: step {k} rewritten seeing {seen:?}, needs {deps:?}");
            }
        }
        let events = recorder.0.lock().unwrap().clone();
        let started = |k| events.iter().position(|&(s, i, d)| s && i == k && d == 2);
        let finished = |k| events.iter().position(|&(s, i, d)| !s && i == k && d == 2);
        for &(a, b) in &stub.edges {
            ensure!(finished(a) < started(b), "case {case}: observer saw {b} start before {a} finished");
        }
    }
    let took = within(Duration::from_secs(10), start)?;
    Ok(format!("500 random digraphs ({cyclic} cyclic) and 500 stub traversals legal, {took:.2?}"))
}

fn grid_lookup() -> Check {
    let table = LookupEvaluator::open_squad_medium();
    ensure!(table.points().len() == 25, "{} rows", table.points().len());
    let res = grid_search(&default_grid(), |p| table.evaluate(p)).map_err(|e| e.to_string())?;
    let best = res.best_row();
    ensure!(best.point.components() == [0.2, 0.4, 0.4, 0.2, 0.55, 0.25], "best {}", best.point);
    ensure!(best.score.em == 31.45 && best.score.f1 == Some(42.17), "score {:?}", best.score);
    Ok(format!("{} EM {} F1 {}", best.point, best.score.em, best.score.f1.unwrap_or(f64::NAN)))
}

fn examples_of(lengths: &[usize], kind: DatasetKind) -> Vec<EvalExample> {
    lengths
        .iter()
        .enumerate()
        .map(|(i, &n)| EvalExample {
            id: i.to_string(),
            question: vec!["w"; n].join(" "),
            gold_answers: vec!["x".into()],
            dataset: kind,
            split: Split::Test,
        })
        .collect()
}

/// Percentile by linear interpolation at position `(n - 1) q`, written
/// against integer lengths.
fn oracle_percentile(lengths: &[usize], q: f64) -> f64 {
    let mut v = lengths.to_vec();
    v.sort_unstable();
    let pos = (v.len() - 1) as f64 * q;
    let i = pos.floor() as usize;
    let j = (i + 1).min(v.len() - 1);
    v[i] as f64 + (pos - i as f64) * (v[j] as f64 - v[i] as f64)
}

fn metrics_suite() -> Check {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    ensure!(eval::exact_match("The President!", &s(&["president"])) == 1.0, "EM normalization");
    ensure!(eval::exact_match("Chairman", &s(&["President", "chairman."])) == 1.0, "EM over golds");
    ensure!(eval::exact_match("Vice President", &s(&["President"])) == 0.0, "EM partial");
    let f = eval::f1("oklahoma agricultural college", &s(&["oklahoma agricultural and mechanical college"]));
    ensure!((f - 0.75).abs() < 1e-12, "F1 {f}");
    ensure!(eval::normalize_answer("The  Cat, a hat.") == "cat hat", "normalize");
    ensure!(eval::normalize_answer("An   apple's core") == "apples core", "normalize possessive");
    ensure!(eval::f1("", &s(&["the"])) == 1.0, "both empty after normalization");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for kind in [DatasetKind::Fever, DatasetKind::OpenSquad, DatasetKind::Hotpotqa] {
        let (lo, hi) = kind.percentiles();
        let mut dists: Vec<Vec<usize>> = vec![(1..=1000).collect(), vec![12; 300]];
        for _ in 0..20 {
            let n = rng.random_range(100..=3000);
            let spread = rng.random_range(1..=60);
            dists.push((0..n).map(|_| 1 + rng.random_range(0..spread) + rng.random_range(0..spread)).collect());
        }
        for lengths in dists {
            let examples = examples_of(&lengths, kind);
            let st = stratify(&examples, kind).map_err(|e| e.to_string())?;
            let (short_t, long_t) = (oracle_percentile(&lengths, lo), oracle_percentile(&lengths, hi));
            ensure!(st.short_threshold == short_t && st.long_threshold == long_t, "{kind:?} thresholds");
            let ids = |v: &[EvalExample]| v.iter().map(|e| e.id.clone()).collect::<BTreeSet<_>>();
            let (l, m, sh) = (ids(&st.long), ids(&st.medium), ids(&st.short));
            let want_l: BTreeSet<String> =
                lengths.iter().enumerate().filter(|(_, &n)| n as f64 > long_t).map(|(i, _)| i.to_string()).collect();
            let want_s: BTreeSet<String> =
                lengths.iter().enumerate().filter(|(_, &n)| (n as f64) < short_t).map(|(i, _)| i.to_string()).collect();
            ensure!(l == want_l && sh == want_s, "{kind:?}: bucket membership differs");
            ensure!(l.is_disjoint(&m) && l.is_disjoint(&sh) && m.is_disjoint(&sh), "buckets overlap");
            ensure!(l.len() + m.len() + sh.len() == lengths.len(), "buckets do not cover the input");
            checked += 1;
        }
    }
    let fever = match std::env::var_os("HGOT_FEVER_TEST") {
        None => "FEVER 113/150/150 skipped, HGOT_FEVER_TEST not set".to_string(),
        Some(path) => {
            let examples = eval::load_dataset(Path::new(&path), DatasetKind::Fever).map_err(|e| e.to_string())?;
            let mut st = stratify(&examples, DatasetKind::Fever).map_err(|e| e.to_string())?;
            st.subsample_medium(DatasetKind::Fever.medium_rate(), 0);
            let got = (st.long.len(), st.medium.len(), st.short.len());
            ensure!(got == (113, 150, 150), "FEVER test buckets {got:?}");
            "FEVER test buckets 113/150/150".to_string()
        }
    };
    Ok(format!("metric cases pass, {checked} synthetic stratifications exact, {fever}"))
}

fn depth_budget_safety() -> Check {
    let mut notes = Vec::new();
    for max_depth in 1..=3u32 {
        let want = adversarial_calls(1, max_depth);
        let mut config = PipelineConfig {
            samples: 3,
            ..PipelineConfig::default()
        };
        config.stop.max_depth = max_depth;
        let stub = Arc::new(AdversarialPlanner::default());
        let pipeline = Pipeline::new(stub_providers(stub.clone()), config.clone()).map_err(|e| e.to_string())?;
        let ans = pipeline.ask("What is the hidden value?").map_err(|e| format!("depth {max_depth}: {e}"))?;
        ensure!(ans.result.max_depth() <= max_depth, "depth {max_depth}: reached {}", ans.result.max_depth());
        ensure!(ans.llm_calls == want, "depth {max_depth}: {} calls, expected {want}", ans.llm_calls);
        ensure!(ans.llm_calls <= config.call_budget, "depth {max_depth}: over budget");

        if want > 1 {
            config.call_budget = want - 1;
            let stub = Arc::new(AdversarialPlanner::default());
            let pipeline = Pipeline::new(stub_providers(stub.clone()), config.clone()).map_err(|e| e.to_string())?;
            match pipeline.ask("What is the hidden value?") {
                Err(e) if matches!(e.root(), PipelineError::BudgetExhausted { .. }) => {}
                other => return Err(format!("depth {max_depth}: tight budget gave {other:?}")),
            }
            let made = stub.calls.load(Ordering::SeqCst);
            ensure!(made <= config.call_budget, "depth {max_depth}: {made} calls past budget {}", config.call_budget);
        }
        notes.push(format!("depth {max_depth}: {want} calls"));
    }
    Ok(notes.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("weighted vote and confidence match brute force", vote_oracle),
        ("uniform quality reduces to majority vote", majority_reduction),
        ("citation frequency and passage score match brute force", passage_oracle),
        ("worked example replays offline", worked_example_replay),
        ("citation counts of the recorded final choices", citation_counts),
        ("format grammar suite", grammar_suite),
        ("DAG order, cycle rejection and schedule legality", dag_properties),
        ("grid search over the lookup table", grid_lookup),
        ("metrics and stratification", metrics_suite),
        ("depth and call budget safety", depth_budget_safety),
    ];
    let total = criteria.len();
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", total - failed, total);
    if failed > 0 {
        std::process::exit(1);
    }
}
