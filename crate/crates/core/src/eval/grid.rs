use std::error::Error as StdError;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::scoring::{QualityWeights, RetrievalWeights};

/// Tolerance used when matching grid points against a lookup table.
const POINT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperparamPoint {
    pub quality: QualityWeights,
    pub retrieval: RetrievalWeights,
}

impl HyperparamPoint {
    pub fn new(q: [f64; 3], w: [f64; 3]) -> Self {
        Self {
            quality: QualityWeights::new(q[0], q[1], q[2]),
            retrieval: RetrievalWeights::new(w[0], w[1], w[2]),
        }
    }

    pub fn components(&self) -> [f64; 6] {
        let (q, w) = (&self.quality, &self.retrieval);
        [q.alpha, q.beta, q.gamma, w.w1, w.w2, w.w3]
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.components().iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(format!("grid point has a negative or non-finite weight: {self}"));
        }
        Ok(())
    }

    fn approx_eq(&self, other: &HyperparamPoint) -> bool {
        self.components()
            .iter()
            .zip(other.components())
            .all(|(a, b)| (a - b).abs() <= POINT_EPS)
    }
}

impl fmt::Display for HyperparamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.components();
        write!(
            f,
            "alpha={} beta={} gamma={} w1={} w2={} w3={}",
            c[0], c[1], c[2], c[3], c[4], c[5]
        )
    }
}

/// Grid file: the product of `quality` × `retrieval` (quality-major),
/// followed by any explicit six-component `points`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub quality: Vec<[f64; 3]>,
    pub retrieval: Vec<[f64; 3]>,
    pub points: Vec<[f64; 6]>,
}

pub const DEFAULT_GRID_TOML: &str = include_str!("../../data/default_grid.toml");

impl GridSpec {
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        toml::from_str(text).map_err(|e| EvalError::Grid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn points(&self) -> Result<Vec<HyperparamPoint>, EvalError> {
        let mut out = Vec::new();
        for q in &self.quality {
            for w in &self.retrieval {
                out.push(HyperparamPoint::new(*q, *w));
            }
        }
        for p in &self.points {
            out.push(HyperparamPoint::new([p[0], p[1], p[2]], [p[3], p[4], p[5]]));
        }
        for p in &out {
            p.validate().map_err(EvalError::Grid)?;
        }
        if out.is_empty() {
            return Err(EvalError::Grid("grid has no points".into()));
        }
        Ok(out)
    }
}

/// The 25-point default grid.
pub fn default_grid() -> Vec<HyperparamPoint> {
    GridSpec::parse(DEFAULT_GRID_TOML)
        .and_then(|g| g.points())
        .expect("bundled grid is valid")
}

/// Scores in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub em: f64,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub point: HyperparamPoint,
    pub score: GridScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub best: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("grid has no points")]
    Empty,
    #[error("grid point {index} ({point}): {source}")]
    Evaluate {
        index: usize,
        point: HyperparamPoint,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
}

/// Scores every point and picks the highest EM; the first listed wins ties.
pub fn grid_search<F, E>(points: &[HyperparamPoint], mut evaluate: F) -> Result<GridResult, GridError>
where
    F: FnMut(&HyperparamPoint) -> Result<GridScore, E>,
    E: Into<Box<dyn StdError + Send + Sync>>,
{
    if points.is_empty() {
        return Err(GridError::Empty);
    }
    let mut rows: Vec<GridRow> = Vec::with_capacity(points.len());
    let mut best = 0;
    for (index, point) in points.iter().enumerate() {
        let score = evaluate(point).map_err(|e| GridError::Evaluate {
            index,
            point: *point,
            source: e.into(),
        })?;
        if index > 0 && score.em > rows[best].score.em {
            best = index;
        }
        rows.push(GridRow { point: *point, score });
    }
    Ok(GridResult { rows, best })
}

impl GridResult {
    pub fn best_row(&self) -> &GridRow {
        &self.rows[self.best]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,gamma,w1,w2,w3,em,f1\n");
        for r in &self.rows {
            let c = r.point.components();
            let f1 = r.score.f1.map(|v| format!("{v:.2}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.2},{}\n",
                c[0], c[1], c[2], c[3], c[4], c[5], r.score.em, f1
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>7} {:>7}\n",
            "alpha", "beta", "gamma", "w1", "w2", "w3", "EM", "F1"
        );
        for (i, r) in self.rows.iter().enumerate() {
            let c = r.point.components();
            let f1 = r.score.f1.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:>6} {:>6} {:>6} {:>6} {:>6} {:>6} {:>7.2} {:>7}{}\n",
                c[0],
                c[1],
                c[2],
                c[3],
                c[4],
                c[5],
                r.score.em,
                f1,
                if i == self.best { "  *" } else { "" }
            ));
        }
        out
    }
}

/// Evaluator that answers from a precomputed score table.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupEvaluator {
    rows: Vec<GridRow>,
}

pub const OPEN_SQUAD_MEDIUM_GRID_CSV: &str = include_str!("../../data/open_squad_medium_grid.csv");

impl LookupEvaluator {
    /// Parses `alpha,beta,gamma,w1,w2,w3,em[,f1]` rows with a header line.
    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |m: String| EvalError::Schema { line: i + 1, message: m };
            if !(7..=8).contains(&cells.len()) {
                return Err(bad(format!("expected 7 or 8 columns, got {}", cells.len())));
            }
            let nums = cells
                .iter()
                .map(|c| if c.is_empty() { Ok(None) } else { c.parse::<f64>().map(Some) })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(e.to_string()))?;
            let need = |k: usize| nums[k].ok_or_else(|| bad(format!("column {} is empty", k + 1)));
            rows.push(GridRow {
                point: HyperparamPoint::new([need(0)?, need(1)?, need(2)?], [need(3)?, need(4)?, need(5)?]),
                score: GridScore {
                    em: need(6)?,
                    f1: nums.get(7).copied().flatten(),
                },
            });
        }
        Ok(Self { rows })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv(&text)
    }

    /// Medium-length Open-SQuAD grid scores for the KNN demo variant.
    pub fn open_squad_medium() -> Self {
        Self::from_csv(OPEN_SQUAD_MEDIUM_GRID_CSV).expect("bundled table is valid")
    }

    pub fn points(&self) -> Vec<HyperparamPoint> {
        self.rows.iter().map(|r| r.point).collect()
    }

    pub fn evaluate(&self, point: &HyperparamPoint) -> Result<GridScore, EvalError> {
        self.rows
            .iter()
            .find(|r| r.point.approx_eq(point))
            .map(|r| r.score)
            .ok_or_else(|| EvalError::Grid(format!("no lookup row for {point}")))
    }
}
