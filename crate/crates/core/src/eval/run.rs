use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::dataset::{DatasetKind, EvalExample};
use super::metrics::score;
use super::report::{BucketScore, Report};
use super::strata::{Bucket, LengthStrata};
use crate::traversal::{Pipeline, PipelineError};

/// Outcome of one example. A failed example scores zero and keeps its error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub id: String,
    pub bucket: Bucket,
    pub prediction: Option<String>,
    pub confidence: Option<f64>,
    pub em: f64,
    pub f1: Option<f64>,
    pub llm_calls: usize,
    pub error: Option<String>,
    /// The failure came from a provider rather than the pipeline logic.
    #[serde(default)]
    pub provider_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    /// Long, then medium, then short; input order within a bucket.
    pub results: Vec<ExampleResult>,
    pub report: Report,
}

impl EvalRun {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.error.is_some()).count()
    }

    /// Every example failed, which points at the setup rather than the data.
    pub fn systemic_failure(&self) -> bool {
        !self.results.is_empty() && self.failures() == self.results.len()
    }
}

fn run_one(pipeline: &Pipeline, kind: DatasetKind, bucket: Bucket, ex: &EvalExample) -> ExampleResult {
    match pipeline.ask(&ex.question) {
        Ok(answer) => {
            let (em, f1) = score(kind, &answer.result.answer, &ex.gold_answers);
            ExampleResult {
                id: ex.id.clone(),
                bucket,
                prediction: Some(answer.result.answer),
                confidence: Some(answer.result.confidence),
                em,
                f1,
                llm_calls: answer.llm_calls,
                error: None,
                provider_error: false,
            }
        }
        Err(e) => {
            log::warn!("example {}: {e}", ex.id);
            ExampleResult {
                id: ex.id.clone(),
                bucket,
                prediction: None,
                confidence: None,
                em: 0.0,
                f1: kind.reports_f1().then_some(0.0),
                llm_calls: 0,
                error: Some(e.to_string()),
                provider_error: matches!(e.root(), PipelineError::Provider(_)),
            }
        }
    }
}

/// Runs every example through the pipeline on `workers` threads and
/// scores per bucket. Results do not depend on the worker count.
pub fn run_eval(
    pipeline: &Pipeline,
    strata: &LengthStrata,
    kind: DatasetKind,
    workers: usize,
    header: Vec<String>,
) -> EvalRun {
    let jobs: Vec<(Bucket, &EvalExample)> = Bucket::ALL
        .iter()
        .flat_map(|b| strata.bucket(*b).iter().map(move |e| (*b, e)))
        .collect();
    let slots: Mutex<Vec<Option<ExampleResult>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((bucket, ex)) = jobs.get(i) else { break };
                let r = run_one(pipeline, kind, *bucket, ex);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
            });
        }
    });
    let results: Vec<ExampleResult> = slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();

    let buckets = Bucket::ALL
        .iter()
        .filter_map(|b| {
            let rows: Vec<&ExampleResult> = results.iter().filter(|r| r.bucket == *b).collect();
            if rows.is_empty() {
                return None;
            }
            let n = rows.len() as f64;
            let em = 100.0 * rows.iter().map(|r| r.em).sum::<f64>() / n;
            let f1 = kind
                .reports_f1()
                .then(|| 100.0 * rows.iter().map(|r| r.f1.unwrap_or(0.0)).sum::<f64>() / n);
            Some(BucketScore { bucket: *b, count: rows.len(), em, f1 })
        })
        .collect();

    EvalRun {
        results,
        report: Report { dataset: kind, header, buckets },
    }
}
