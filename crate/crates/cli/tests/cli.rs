use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const QUESTION: &str = "What was Todd Boehly's former position at the firm where Mark Walter is the CEO?";

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/todd_boehly")
}

fn hgot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgot"))
        .args(args)
        .env_remove("HGOT_MODE")
        .env_remove("HGOT_FIXTURES")
        .env_remove("HGOT_SEED")
        .env_remove("HGOT_WORKERS")
        .env_remove("HGOT_DEMO_MODE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn replay_args(fx: &Path) -> Vec<String> {
    vec!["--mode".into(), "replay".into(), "--fixtures".into(), fx.display().to_string()]
}

fn run_with(prefix: &[String], rest: &[&str]) -> Output {
    let mut args: Vec<&str> = prefix.iter().map(String::as_str).collect();
    args.extend_from_slice(rest);
    hgot(&args)
}

fn write_dataset(dir: &Path, name: &str, lines: &[String]) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, lines.join("\n")).unwrap();
    path
}

fn three_examples(dir: &Path) -> PathBuf {
    let golds = ["President", "the president", "President."];
    let lines: Vec<String> = golds
        .iter()
        .enumerate()
        .map(|(i, g)| format!(r#"{{"id": "q{i}", "question": "{QUESTION}", "answers": ["{g}"]}}"#))
        .collect();
    write_dataset(dir, "three.jsonl", &lines)
}

/// Report rows without the configuration header.
fn body(report: &str) -> String {
    report.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn ask_replay_prints_answer_and_writes_dot() {
    let tmp = tempfile::tempdir().unwrap();
    let dot = tmp.path().join("g.dot");
    let out = run_with(&replay_args(&fixtures()), &["ask", QUESTION, "--dot", dot.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("answer: President\n"), "{text}");
    assert!(text.contains("confidence: 1.0\n"), "{text}");
    assert!(text.contains("What was Todd Boehly's former position at Guggenheim Partners?"));

    let graph = fs::read_to_string(&dot).unwrap();
    assert!(graph.starts_with("digraph hgot {"));
    assert!(graph.trim_end().ends_with('}'));
    assert_eq!(graph.matches('{').count(), graph.matches('}').count());
    for line in graph.lines().skip(1) {
        let l = line.trim();
        assert!(l.ends_with(';') || l.ends_with('{') || l == "}", "odd DOT line {l:?}");
    }
}

#[test]
fn replay_without_fixtures_is_config_error() {
    let out = hgot(&["--mode", "replay", "ask", QUESTION]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).is_empty());
}

#[test]
fn fixture_miss_is_provider_error() {
    let out = run_with(&replay_args(&fixtures()), &["ask", "Who wrote Hamlet?"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eval_all_correct_is_full_marks_and_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let data = three_examples(tmp.path());
    let a = tmp.path().join("a");
    let out = run_with(
        &replay_args(&fixtures()),
        &["eval", data.to_str().unwrap(), "--out", a.to_str().unwrap(), "--workers", "2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(a.join("report.csv")).unwrap();
    assert!(csv.contains("overall,3,100.0000,100.0000"), "{csv}");
    assert!(csv.contains("# seed = 0") || csv.contains("seed = 0"));
    assert_eq!(fs::read_to_string(a.join("results.jsonl")).unwrap().lines().count(), 3);

    // Second run against a record-mode cache: every request is answered from
    // the fixtures, so the scores must not move.
    let cache = tmp.path().join("cache");
    fs::create_dir(&cache).unwrap();
    for e in fs::read_dir(fixtures()).unwrap() {
        let p = e.unwrap().path();
        fs::copy(&p, cache.join(p.file_name().unwrap())).unwrap();
    }
    let b = tmp.path().join("b");
    let out = Command::new(env!("CARGO_BIN_EXE_hgot"))
        .args(["--mode", "record", "--fixtures", cache.to_str().unwrap()])
        .args(["eval", data.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("OPENAI_API_KEY", "unused")
        .env("SERPAPI_API_KEY", "unused")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read_to_string(a.join("report.csv")).unwrap();
    let second = fs::read_to_string(b.join("report.csv")).unwrap();
    assert_eq!(body(&first), body(&second));
    assert_eq!(
        fs::read_to_string(a.join("results.jsonl")).unwrap(),
        fs::read_to_string(b.join("results.jsonl")).unwrap()
    );
    assert_eq!(fs::read_dir(&cache).unwrap().count(), fs::read_dir(fixtures()).unwrap().count());
}

#[test]
fn verification_report_has_no_f1() {
    let tmp = tempfile::tempdir().unwrap();
    let line = format!(r#"{{"id": "c1", "claim": "{QUESTION}", "label": "SUPPORTS"}}"#);
    let data = write_dataset(tmp.path(), "fever.jsonl", &[line]);
    let out = run_with(&replay_args(&fixtures()), &["eval", data.to_str().unwrap(), "--kind", "fever"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("EM"));
    assert!(!text.contains("F1"), "{text}");
}

#[test]
fn grid_lookup_selects_optimum() {
    let out = hgot(&["grid", "--lookup", "builtin"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("best: alpha=0.2 beta=0.4 gamma=0.4 w1=0.2 w2=0.55 w3=0.25 EM 31.45 F1 42.17"), "{text}");
    let rows = text.lines().filter(|l| l.trim_start().chars().next().is_some_and(|c| c.is_ascii_digit())).count();
    assert_eq!(rows, 25);
}

#[test]
fn grid_single_point() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = tmp.path().join("g.toml");
    fs::write(&grid, "points = [[0.3, 0.35, 0.35, 0.3, 0.5, 0.2]]\n").unwrap();
    let out = hgot(&["grid", "--lookup", "builtin", "--grid", grid.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("best: alpha=0.3 beta=0.35 gamma=0.35 w1=0.3 w2=0.5 w3=0.2 EM 28.30"));
}

#[test]
fn grid_without_data_or_lookup_is_config_error() {
    assert_eq!(hgot(&["grid"]).status.code(), Some(2));
}

#[test]
fn annotate_writes_demos() {
    let tmp = tempfile::tempdir().unwrap();
    let line = format!(r#"{{"id": "boehly", "question": "{QUESTION}", "answers": ["President"]}}"#);
    let data = write_dataset(tmp.path(), "train.jsonl", &[line]);
    let out_dir = tmp.path().join("demos");
    let out = run_with(
        &replay_args(&fixtures()),
        &["annotate", data.to_str().unwrap(), "--out", out_dir.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("accepted 1 of 1 examples; wrote 5 demonstrations"));
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 5);

    // The annotated library loads back in.
    let out = run_with(
        &replay_args(&fixtures()),
        &["--demos", out_dir.to_str().unwrap(), "ask", "Who wrote Hamlet?"],
    );
    assert_eq!(out.status.code(), Some(3), "demos load, then the unknown question misses the fixtures");
}

#[test]
fn fixtures_seed_and_list() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fx");
    let out = hgot(&["fixtures", "seed", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let committed = fs::read_dir(fixtures()).unwrap().count();
    assert!(stdout(&out).starts_with(&format!("recorded {committed} fixtures")));
    let out = hgot(&["fixtures", "list", dir.to_str().unwrap()]);
    assert!(stdout(&out).trim_end().ends_with(&format!("{committed} entries")));
}
