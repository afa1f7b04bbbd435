//! Python bindings: answer questions, score votes, parse plans, run metrics.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use hgot::config::{ConfigError, Overrides, RunConfig};
use hgot::demos::{normalize_citation_marks as normalize_marks, DemoMode};
use hgot::eval::{self, DatasetKind, GridSpec, LookupEvaluator};
use hgot::planparse;
use hgot::providers::{ProviderError, ProviderMode};
use hgot::scoring::{confidence, weighted_vote, Thought, VotePool};
use hgot::transcript;
use hgot::traversal::{self, PipelineError};

create_exception!(hgot_py, HgotError, PyException);
create_exception!(hgot_py, ConfigurationError, HgotError);
create_exception!(hgot_py, ProviderFailure, HgotError);
create_exception!(hgot_py, PipelineFailure, HgotError);

fn config_err(e: ConfigError) -> PyErr {
    ConfigurationError::new_err(e.to_string())
}

fn provider_err(e: ProviderError) -> PyErr {
    match e {
        ProviderError::Config(m) => ConfigurationError::new_err(m),
        other => ProviderFailure::new_err(other.to_string()),
    }
}

fn pipeline_err(e: PipelineError) -> PyErr {
    match e.root() {
        PipelineError::Config(_) | PipelineError::Provider(ProviderError::Config(_)) => {
            ConfigurationError::new_err(e.to_string())
        }
        PipelineError::Provider(_) => ProviderFailure::new_err(e.to_string()),
        _ => PipelineFailure::new_err(e.to_string()),
    }
}

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Result of one question.
#[pyclass(module = "hgot_py", frozen)]
struct Answer {
    inner: traversal::Answer,
}

#[pymethods]
impl Answer {
    #[getter]
    fn answer(&self) -> &str {
        &self.inner.result.answer
    }

    #[getter]
    fn confidence(&self) -> f64 {
        self.inner.result.confidence
    }

    #[getter]
    fn llm_calls(&self) -> usize {
        self.inner.llm_calls
    }

    /// Sub-questions in search order, after rewriting.
    #[getter]
    fn steps(&self) -> Vec<(String, String)> {
        self.inner
            .result
            .children
            .iter()
            .map(|c| (c.question.clone(), c.answer.clone()))
            .collect()
    }

    /// Dependency edges of the top-level plan.
    #[getter]
    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner
            .result
            .plan
            .as_ref()
            .map(|p| p.graph.edges().map(|(a, b)| (a.index(), b.index())).collect())
            .unwrap_or_default()
    }

    fn summary(&self) -> Vec<String> {
        self.inner.result.summary_lines()
    }

    fn to_dot(&self) -> String {
        self.inner.result.to_dot()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.result).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Answer({:?}, confidence={})", self.inner.result.answer, self.inner.result.confidence)
    }
}

/// A configured pipeline. Arguments override the config file and the
/// environment, as on the command line.
#[pyclass(module = "hgot_py", frozen)]
struct Pipeline {
    inner: traversal::Pipeline,
    config: RunConfig,
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (config=None, mode=None, fixtures=None, seed=None, demo_mode=None))]
    fn new(
        config: Option<PathBuf>,
        mode: Option<&str>,
        fixtures: Option<PathBuf>,
        seed: Option<u64>,
        demo_mode: Option<&str>,
    ) -> PyResult<Self> {
        let overrides = Overrides {
            mode: mode.map(str::parse::<ProviderMode>).transpose().map_err(ConfigurationError::new_err)?,
            fixtures,
            workers: None,
            seed,
            demo_mode: demo_mode
                .map(str::parse::<DemoMode>)
                .transpose()
                .map_err(ConfigurationError::new_err)?,
        };
        let config = RunConfig::resolve(config.as_deref(), &|k| std::env::var(k).ok(), &overrides).map_err(config_err)?;
        let providers = config.providers().map_err(provider_err)?;
        let inner = traversal::Pipeline::new(providers, config.pipeline.clone()).map_err(pipeline_err)?;
        Ok(Self { inner, config })
    }

    fn ask(&self, py: Python<'_>, question: &str) -> PyResult<Answer> {
        let inner = py.detach(|| self.inner.ask(question)).map_err(pipeline_err)?;
        Ok(Answer { inner })
    }

    /// The resolved configuration as TOML.
    fn config_toml(&self) -> String {
        self.config.header_lines().join("\n")
    }
}

/// Quality-weighted vote: returns the winning answer (first spelling seen)
/// and its share of the total quality.
#[pyfunction]
fn vote(answers: Vec<String>, qualities: Vec<f64>) -> PyResult<(String, f64)> {
    if answers.len() != qualities.len() {
        return Err(value_err("answers and qualities differ in length"));
    }
    let thoughts: Vec<Thought> = answers
        .into_iter()
        .zip(qualities)
        .map(|(a, q)| Thought::new("", Vec::new(), a).with_quality(q))
        .collect();
    let pool = VotePool::new(thoughts);
    let chosen = weighted_vote(&pool).map_err(value_err)?;
    let ci = confidence(&pool, &chosen).map_err(value_err)?;
    Ok((chosen, ci))
}

/// Moves citation markers to sentence ends.
#[pyfunction]
fn normalize_citation_marks(text: &str) -> PyResult<String> {
    normalize_marks(text).map_err(value_err)
}

/// Edges from arrow notation such as `Step 1 -> (Step 2 and Step 3)`.
#[pyfunction]
fn parse_dependency_dsl(text: &str) -> PyResult<Vec<(u32, u32)>> {
    let edges = planparse::parse_dependency_dsl(text).map_err(value_err)?;
    Ok(edges.into_iter().map(|(a, b)| (a.index(), b.index())).collect())
}

/// Edges from sentences such as `Step 2 depends on Step 1.` or `None`.
#[pyfunction]
fn parse_dependency_description(text: &str) -> PyResult<Vec<(u32, u32)>> {
    let edges = planparse::parse_dependency_description(text).map_err(value_err)?;
    Ok(edges.into_iter().map(|(a, b)| (a.index(), b.index())).collect())
}

#[pyfunction]
fn exact_match(prediction: &str, golds: Vec<String>) -> f64 {
    eval::exact_match(prediction, &golds)
}

#[pyfunction]
fn f1(prediction: &str, golds: Vec<String>) -> f64 {
    eval::f1(prediction, &golds)
}

#[pyfunction]
fn normalize_answer(text: &str) -> String {
    eval::normalize_answer(text)
}

/// Runs a grid over a score table and returns
/// `((alpha, beta, gamma, w1, w2, w3), em, f1)` for the best point.
/// Without arguments, the bundled Open-SQuAD table and default grid are used.
#[pyfunction]
#[pyo3(signature = (lookup=None, grid=None))]
fn grid_search_lookup(
    lookup: Option<PathBuf>,
    grid: Option<PathBuf>,
) -> PyResult<((f64, f64, f64, f64, f64, f64), f64, Option<f64>)> {
    let table = match lookup {
        Some(p) => LookupEvaluator::load(&p).map_err(value_err)?,
        None => LookupEvaluator::open_squad_medium(),
    };
    let points = match grid {
        Some(p) => GridSpec::load(&p).and_then(|g| g.points()).map_err(value_err)?,
        None => eval::default_grid(),
    };
    let res = eval::grid_search(&points, |p| table.evaluate(p)).map_err(value_err)?;
    let best = res.best_row();
    let c = best.point.components();
    Ok(((c[0], c[1], c[2], c[3], c[4], c[5]), best.score.em, best.score.f1))
}

/// Splits questions into long, medium and short by word count; returns
/// index lists.
#[pyfunction]
fn stratify(questions: Vec<String>, kind: &str) -> PyResult<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let kind: DatasetKind = kind.parse().map_err(value_err)?;
    let examples: Vec<eval::EvalExample> = questions
        .into_iter()
        .enumerate()
        .map(|(i, q)| eval::EvalExample {
            id: i.to_string(),
            question: q,
            gold_answers: vec![String::new()],
            dataset: kind,
            split: eval::Split::Test,
        })
        .collect();
    let s = eval::stratify(&examples, kind).map_err(value_err)?;
    let ids = |v: &[eval::EvalExample]| v.iter().map(|e| e.id.parse().unwrap_or(0)).collect();
    Ok((ids(&s.long), ids(&s.medium), ids(&s.short)))
}

/// Records the bundled worked example into `dir`; returns the entry count.
#[pyfunction]
fn seed_fixtures(py: Python<'_>, dir: PathBuf) -> PyResult<usize> {
    let (_, count) = py
        .detach(|| transcript::seed_fixtures(&dir, traversal::PipelineConfig::default()))
        .map_err(pipeline_err)?;
    Ok(count)
}

#[pymodule]
fn hgot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("HgotError", py.get_type::<HgotError>())?;
    m.add("ConfigurationError", py.get_type::<ConfigurationError>())?;
    m.add("ProviderFailure", py.get_type::<ProviderFailure>())?;
    m.add("PipelineFailure", py.get_type::<PipelineFailure>())?;
    m.add("WORKED_EXAMPLE_QUESTION", transcript::QUESTION)?;
    m.add_class::<Pipeline>()?;
    m.add_class::<Answer>()?;
    m.add_function(wrap_pyfunction!(vote, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_citation_marks, m)?)?;
    m.add_function(wrap_pyfunction!(parse_dependency_dsl, m)?)?;
    m.add_function(wrap_pyfunction!(parse_dependency_description, m)?)?;
    m.add_function(wrap_pyfunction!(exact_match, m)?)?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_answer, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search_lookup, m)?)?;
    m.add_function(wrap_pyfunction!(stratify, m)?)?;
    m.add_function(wrap_pyfunction!(seed_fixtures, m)?)?;
    Ok(())
}
