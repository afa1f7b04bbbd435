use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Fever,
    OpenSquad,
    Hotpotqa,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Fever => "fever",
            DatasetKind::OpenSquad => "open_squad",
            DatasetKind::Hotpotqa => "hotpotqa",
        }
    }

    /// Lower and upper length percentiles, as fractions.
    pub fn percentiles(self) -> (f64, f64) {
        match self {
            DatasetKind::Hotpotqa => (0.02, 0.98),
            _ => (0.015, 0.985),
        }
    }

    /// Share of the medium bucket kept for evaluation.
    pub fn medium_rate(self) -> f64 {
        match self {
            DatasetKind::Hotpotqa => 0.02,
            _ => 0.015,
        }
    }

    /// Whether token-overlap F1 is meaningful for this dataset's answers.
    pub fn reports_f1(self) -> bool {
        self != DatasetKind::Fever
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "fever" => Ok(DatasetKind::Fever),
            "open_squad" | "opensquad" | "squad" => Ok(DatasetKind::OpenSquad),
            "hotpotqa" | "hotpot_qa" | "hotpot" => Ok(DatasetKind::Hotpotqa),
            other => Err(format!("unknown dataset kind {other:?}; expected fever, open_squad or hotpotqa")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" | "validation" | "val" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalExample {
    pub id: String,
    /// The question, or the claim for fact verification.
    pub question: String,
    /// Never empty.
    pub gold_answers: Vec<String>,
    pub dataset: DatasetKind,
    pub split: Split,
}

pub const SUPPORTS: &str = "SUPPORTS";
pub const REFUTES: &str = "REFUTES";
pub const NOT_ENOUGH_INFO: &str = "NOT ENOUGH INFO";

/// Maps the common spellings of a verification verdict to its label.
pub fn fever_label(raw: &str) -> Option<&'static str> {
    let key: String = raw
        .trim()
        .trim_end_matches('.')
        .to_ascii_uppercase()
        .chars()
        .map(|c| if c == '_' || c == '-' { ' ' } else { c })
        .collect();
    match key.split_whitespace().collect::<Vec<_>>().join(" ").as_str() {
        "SUPPORTS" | "SUPPORTED" | "SUPPORT" | "TRUE" => Some(SUPPORTS),
        "REFUTES" | "REFUTED" | "REFUTE" | "FALSE" => Some(REFUTES),
        "NOT ENOUGH INFO" | "NOT ENOUGH INFORMATION" | "NEI" => Some(NOT_ENOUGH_INFO),
        _ => None,
    }
}

/// Reads a JSON-lines dataset. Blank lines are skipped; line numbers in
/// errors are 1-based.
///
/// Each record has `id`, `question` (or `claim`), `answers` and optionally
/// `label` and `split`. Fact-verification records may give only `label`.
pub fn load_dataset(path: &Path, kind: DatasetKind) -> Result<Vec<EvalExample>, EvalError> {
    let file = File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(BufReader::new(file), kind)
}

pub fn parse_dataset(reader: impl BufRead, kind: DatasetKind) -> Result<Vec<EvalExample>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| EvalError::Io {
            path: format!("line {line_no}"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&line, kind).map_err(|message| EvalError::Schema { line: line_no, message })?);
    }
    Ok(out)
}

fn parse_record(line: &str, kind: DatasetKind) -> Result<EvalExample, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("record is not a JSON object")?;

    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err("missing or empty \"id\"".into()),
    };
    let question = ["question", "claim"]
        .iter()
        .find_map(|k| obj.get(*k).and_then(Value::as_str))
        .map(str::trim)
        .filter(|q| !q.is_empty())
        .ok_or("missing \"question\" (or \"claim\")")?
        .to_string();

    let answers: Option<Vec<String>> = match obj.get("answers") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => Some(
            items
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or("\"answers\" must hold strings"))
                .collect::<Result<_, _>>()?,
        ),
        Some(Value::String(s)) => Some(vec![s.clone()]),
        Some(_) => return Err("\"answers\" must be a list of strings".into()),
    };
    let label = obj.get("label").and_then(Value::as_str);

    let gold_answers = if kind == DatasetKind::Fever {
        let raw = label
            .or_else(|| answers.as_ref().and_then(|a| a.first().map(String::as_str)))
            .ok_or("missing \"answers\" or \"label\"")?;
        vec![fever_label(raw).ok_or_else(|| format!("unknown verdict label {raw:?}"))?.to_string()]
    } else {
        let answers = answers.ok_or("missing \"answers\"")?;
        let kept: Vec<String> = answers.into_iter().filter(|a| !a.trim().is_empty()).collect();
        if kept.is_empty() {
            return Err("\"answers\" is empty".into());
        }
        kept
    };

    let split = match obj.get("split").and_then(Value::as_str) {
        Some(s) => s.parse()?,
        None => Split::Test,
    };

    Ok(EvalExample {
        id,
        question,
        gold_answers,
        dataset: kind,
        split,
    })
}
