use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand};

use hgot::config::{ConfigError, Overrides, RunConfig};
use hgot::demos::{annotate, DemoError, DemoLibrary, DemoMode, TrainingExample};
use hgot::eval::{
    default_grid, grid_search, load_dataset, run_eval, stratify, DatasetKind, EvalError, EvalExample, EvalRun,
    GridError, GridScore, GridSpec, LengthStrata, LookupEvaluator,
};
use hgot::providers::{FixtureCache, ProviderError, ProviderMode};
use hgot::transcript;
use hgot::traversal::{Pipeline, PipelineError};

#[derive(Parser)]
#[command(name = "hgot", version, about = "Multi-hop retrieval-augmented question answering")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// live, record or replay.
    #[arg(long, global = true)]
    mode: Option<ProviderMode>,
    /// Fixture directory for record and replay.
    #[arg(long, global = true, value_name = "PATH")]
    fixtures: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// balanced or knn.
    #[arg(long = "demo-mode", global = true)]
    demo_mode: Option<DemoMode>,
    /// Demonstration directory written by `annotate`; its pools replace the built-in ones.
    #[arg(long, global = true, value_name = "DIR")]
    demos: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Answer one question.
    Ask {
        question: String,
        /// Write the traversal graph in Graphviz format.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
        /// Write the full traversal record as JSON.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Evaluate a JSON-lines dataset by question length.
    Eval {
        dataset: PathBuf,
        #[arg(long, default_value = "open_squad")]
        kind: DatasetKind,
        /// Directory for report.txt, report.csv and results.jsonl.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Search quality and retrieval weights.
    Grid {
        /// Dataset to evaluate each point on; not needed with --lookup.
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "open_squad")]
        kind: DatasetKind,
        /// Grid definition; the 25-point default when absent.
        #[arg(long, value_name = "PATH")]
        grid: Option<PathBuf>,
        /// Score table (alpha,beta,gamma,w1,w2,w3,em[,f1]) used instead of running
        /// the pipeline. `builtin` selects the bundled Open-SQuAD table.
        #[arg(long, value_name = "CSV")]
        lookup: Option<String>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Build demonstrations from correctly answered training examples.
    Annotate {
        dataset: PathBuf,
        #[arg(long, default_value = "open_squad")]
        kind: DatasetKind,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Stop after this many accepted examples.
        #[arg(long, default_value_t = 16)]
        limit: usize,
    },
    /// Inspect or create replay fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Subcommand)]
enum FixtureAction {
    /// List recorded entries.
    List { dir: PathBuf },
    /// Record the bundled worked example into a directory.
    Seed { dir: PathBuf },
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Provider(anyhow::Error),
    Pipeline(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Provider(_) => 3,
            Failure::Pipeline(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Provider(e) | Failure::Pipeline(e) => e,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

impl From<ProviderError> for Failure {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::Config(_) => Failure::Config(e.into()),
            _ => Failure::Provider(e.into()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e.root() {
            PipelineError::Config(_) => Failure::Config(e.into()),
            PipelineError::Provider(ProviderError::Config(_)) => Failure::Config(e.into()),
            PipelineError::Provider(_) => Failure::Provider(e.into()),
            _ => Failure::Pipeline(e.into()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::Config(e.into())
    }
}

impl From<DemoError> for Failure {
    fn from(e: DemoError) -> Self {
        match e {
            DemoError::Provider(p) => p.into(),
            other => Failure::Pipeline(other.into()),
        }
    }
}

impl From<GridError> for Failure {
    fn from(e: GridError) -> Self {
        Failure::Pipeline(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn resolve_config(g: &GlobalArgs) -> Result<RunConfig, Failure> {
    let overrides = Overrides {
        mode: g.mode,
        fixtures: g.fixtures.clone(),
        workers: g.workers,
        seed: g.seed,
        demo_mode: g.demo_mode,
    };
    Ok(RunConfig::resolve(g.config.as_deref(), &|k| std::env::var(k).ok(), &overrides)?)
}

fn build_pipeline(cfg: &RunConfig, demos: Option<&Path>) -> Result<Pipeline, Failure> {
    let mut pipeline = Pipeline::new(cfg.providers()?, cfg.pipeline.clone())?;
    if let Some(dir) = demos {
        let loaded = DemoLibrary::load(dir).map_err(|e| Failure::Config(e.into()))?;
        pipeline = pipeline.with_demos(DemoLibrary::builtin().overlay(loaded));
    }
    Ok(pipeline)
}

fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    match cli.command {
        Command::Ask { question, dot, json } => cmd_ask(g, &question, dot.as_deref(), json.as_deref()),
        Command::Eval { dataset, kind, out } => cmd_eval(g, &dataset, kind, out.as_deref()),
        Command::Grid { dataset, kind, grid, lookup, out } => {
            cmd_grid(g, dataset.as_deref(), kind, grid.as_deref(), lookup.as_deref(), out.as_deref())
        }
        Command::Annotate { dataset, kind, out, limit } => cmd_annotate(g, &dataset, kind, &out, limit),
        Command::Fixtures { action } => match action {
            FixtureAction::List { dir } => cmd_fixtures_list(&dir),
            FixtureAction::Seed { dir } => cmd_fixtures_seed(g, &dir),
        },
    }
}

fn cmd_ask(g: &GlobalArgs, question: &str, dot: Option<&Path>, json: Option<&Path>) -> Outcome {
    let cfg = resolve_config(g)?;
    let pipeline = build_pipeline(&cfg, g.demos.as_deref())?;
    let answer = pipeline.ask(question)?;
    let r = &answer.result;
    println!("answer: {}", r.answer);
    println!("confidence: {:?}", r.confidence);
    println!("llm calls: {}", answer.llm_calls);
    for line in r.summary_lines() {
        println!("{line}");
    }
    if let Some(path) = dot {
        fs::write(path, r.to_dot()).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(r).map_err(|e| anyhow!(e))?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn strata_for(examples: &[EvalExample], kind: DatasetKind, cfg: &RunConfig) -> Result<LengthStrata, Failure> {
    let mut strata = match stratify(examples, kind) {
        Ok(s) => s,
        Err(EvalError::TooFewExamples { needed, got }) => {
            log::warn!("{got} examples is below {needed}; evaluating without length buckets");
            LengthStrata::unstratified(examples)
        }
        Err(e) => return Err(e.into()),
    };
    if cfg.eval.subsample_medium {
        let rate = cfg.eval.medium_rate.unwrap_or(kind.medium_rate());
        strata.subsample_medium(rate, cfg.pipeline.seed);
    }
    Ok(strata)
}

fn eval_header(cfg: &RunConfig, strata: &LengthStrata) -> Vec<String> {
    let mut header = cfg.header_lines();
    header.push(format!(
        "strata: short < {} (p{}), long > {} (p{})",
        strata.short_threshold,
        strata.short_percentile * 100.0,
        strata.long_threshold,
        strata.long_percentile * 100.0
    ));
    if let Some(s) = &strata.medium_sample {
        header.push(format!("medium subsample: rate {} of {} with seed {}", s.rate, s.population, s.seed));
    }
    header
}

fn systemic(run: &EvalRun) -> Outcome {
    if !run.systemic_failure() {
        return Ok(());
    }
    let first = run.results.iter().find_map(|r| r.error.clone()).unwrap_or_default();
    let err = anyhow!("all {} examples failed; first error: {first}", run.results.len());
    if run.results.iter().all(|r| r.provider_error) {
        Err(Failure::Provider(err))
    } else {
        Err(Failure::Pipeline(err))
    }
}

fn write_eval(out: &Path, run: &EvalRun) -> Outcome {
    fs::create_dir_all(out)?;
    fs::write(out.join("report.txt"), run.report.to_text())?;
    fs::write(out.join("report.csv"), run.report.to_csv())?;
    let mut lines = String::new();
    for r in &run.results {
        lines.push_str(&serde_json::to_string(r).map_err(|e| anyhow!(e))?);
        lines.push('\n');
    }
    fs::write(out.join("results.jsonl"), lines)?;
    Ok(())
}

fn cmd_eval(g: &GlobalArgs, dataset: &Path, kind: DatasetKind, out: Option<&Path>) -> Outcome {
    let cfg = resolve_config(g)?;
    let examples = load_dataset(dataset, kind)?;
    let strata = strata_for(&examples, kind, &cfg)?;
    let pipeline = build_pipeline(&cfg, g.demos.as_deref())?;
    let run = run_eval(&pipeline, &strata, kind, cfg.workers, eval_header(&cfg, &strata));
    print!("{}", run.report.to_text());
    if run.failures() > 0 {
        eprintln!("{} of {} examples failed", run.failures(), run.results.len());
    }
    if let Some(dir) = out {
        write_eval(dir, &run)?;
    }
    systemic(&run)
}

fn cmd_grid(
    g: &GlobalArgs,
    dataset: Option<&Path>,
    kind: DatasetKind,
    grid: Option<&Path>,
    lookup: Option<&str>,
    out: Option<&Path>,
) -> Outcome {
    let points = match grid {
        Some(p) => GridSpec::load(p)?.points()?,
        None => default_grid(),
    };
    let result = if let Some(table) = lookup {
        let evaluator = if table == "builtin" {
            LookupEvaluator::open_squad_medium()
        } else {
            LookupEvaluator::load(Path::new(table))?
        };
        grid_search(&points, |p| evaluator.evaluate(p))?
    } else {
        let dataset = dataset.ok_or_else(|| Failure::Config(anyhow!("grid needs a dataset or --lookup")))?;
        let cfg = resolve_config(g)?;
        let examples = load_dataset(dataset, kind)?;
        let strata = strata_for(&examples, kind, &cfg)?;
        let providers = cfg.providers()?;
        grid_search(&points, |p| -> Result<GridScore, Failure> {
            let mut point_cfg = cfg.clone();
            point_cfg.pipeline.quality = p.quality;
            point_cfg.pipeline.retrieval = p.retrieval;
            let mut pipeline = Pipeline::new(providers.clone(), point_cfg.pipeline.clone())?;
            if let Some(dir) = g.demos.as_deref() {
                let loaded = DemoLibrary::load(dir).map_err(|e| Failure::Config(e.into()))?;
                pipeline = pipeline.with_demos(DemoLibrary::builtin().overlay(loaded));
            }
            let run = run_eval(&pipeline, &strata, kind, cfg.workers, eval_header(&point_cfg, &strata));
            systemic(&run)?;
            let o = run.report.overall();
            Ok(GridScore { em: o.em, f1: o.f1 })
        })
        .map_err(|e| match e {
            GridError::Evaluate { source, .. } => match source.downcast::<FailureBox>() {
                Ok(f) => f.0,
                Err(other) => Failure::Pipeline(anyhow!(other)),
            },
            other => other.into(),
        })?
    };
    print!("{}", result.to_text());
    let best = result.best_row();
    let f1 = best.score.f1.map(|v| format!(" F1 {v:.2}")).unwrap_or_default();
    println!("best: {} EM {:.2}{f1}", best.point, best.score.em);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("grid.csv"), result.to_csv())?;
        fs::write(dir.join("grid.txt"), result.to_text())?;
    }
    Ok(())
}

/// Carries a classified failure through the grid's boxed error.
#[derive(Debug)]
struct FailureBox(Failure);

impl std::fmt::Display for FailureBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0.error())
    }
}

impl std::error::Error for FailureBox {}

impl From<Failure> for Box<dyn std::error::Error + Send + Sync> {
    fn from(f: Failure) -> Self {
        Box::new(FailureBox(f))
    }
}

fn cmd_annotate(g: &GlobalArgs, dataset: &Path, kind: DatasetKind, out: &Path, limit: usize) -> Outcome {
    let cfg = resolve_config(g)?;
    let examples: Vec<TrainingExample> = load_dataset(dataset, kind)?
        .into_iter()
        .map(|e| TrainingExample {
            id: e.id,
            question: e.question,
            gold_answer: e.gold_answers[0].clone(),
            answer_class: None,
        })
        .collect();
    let pipeline = build_pipeline(&cfg, g.demos.as_deref())?;
    let result = annotate(&examples, &pipeline, limit)?;
    let written = result.library.save(out)?;
    println!(
        "accepted {} of {} examples; wrote {written} demonstrations to {}",
        result.accepted.len(),
        result.accepted.len() + result.rejected.len(),
        out.display()
    );
    for r in &result.rejected {
        log::info!("rejected {}: {}", r.example_id, r.reason);
    }
    Ok(())
}

fn cmd_fixtures_list(dir: &Path) -> Outcome {
    let cache = FixtureCache::open_existing(dir)?;
    let entries = cache.entries()?;
    for e in &entries {
        let summary = e
            .request
            .get("query")
            .or_else(|| e.request.get("text"))
            .and_then(|v| v.as_str())
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("{} bytes", e.response.len()));
        println!("{} {:<6} {}", &e.key[..16], e.provider_kind, truncate(&summary, 80));
    }
    println!("{} entries", entries.len());
    Ok(())
}

fn truncate(s: &str, max: usize) -> String {
    let line = s.lines().next().unwrap_or("");
    if line.chars().count() <= max {
        line.to_string()
    } else {
        format!("{}...", line.chars().take(max).collect::<String>())
    }
}

fn cmd_fixtures_seed(g: &GlobalArgs, dir: &Path) -> Outcome {
    let cfg = match &g.config {
        Some(p) => RunConfig::load(p)?.pipeline,
        None => Default::default(),
    };
    let (answer, count) = transcript::seed_fixtures(dir, cfg)?;
    println!(
        "recorded {count} fixtures in {}; answer {} (CI {})",
        dir.display(),
        answer.result.answer,
        answer.result.confidence
    );
    Ok(())
}
