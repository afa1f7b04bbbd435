use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetKind, EvalExample};
use super::EvalError;
use crate::text::{quantile_linear, word_count};

/// Fewest examples for which length percentiles are meaningful.
pub const MIN_STRATIFY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Long,
    Medium,
    Short,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::Long, Bucket::Medium, Bucket::Short];

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Long => "long",
            Bucket::Medium => "medium",
            Bucket::Short => "short",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Bucket::Long => "Long",
            Bucket::Medium => "Medium",
            Bucket::Short => "Short",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Bucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "long" => Ok(Bucket::Long),
            "medium" => Ok(Bucket::Medium),
            "short" => Ok(Bucket::Short),
            other => Err(format!("unknown bucket {other:?}")),
        }
    }
}

/// Examples split by question length in word tokens.
///
/// Long means strictly above the upper percentile value, short strictly
/// below the lower one. Buckets keep input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStrata {
    pub short_percentile: f64,
    pub long_percentile: f64,
    pub short_threshold: f64,
    pub long_threshold: f64,
    pub long: Vec<EvalExample>,
    pub medium: Vec<EvalExample>,
    pub short: Vec<EvalExample>,
    /// Set once the medium bucket has been subsampled.
    pub medium_sample: Option<MediumSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumSample {
    pub rate: f64,
    pub seed: u64,
    pub population: usize,
}

impl LengthStrata {
    /// Everything in the medium bucket, for sets too small to split.
    pub fn unstratified(examples: &[EvalExample]) -> Self {
        Self {
            short_percentile: 0.0,
            long_percentile: 1.0,
            short_threshold: f64::NEG_INFINITY,
            long_threshold: f64::INFINITY,
            long: Vec::new(),
            medium: examples.to_vec(),
            short: Vec::new(),
            medium_sample: None,
        }
    }

    pub fn bucket(&self, b: Bucket) -> &[EvalExample] {
        match b {
            Bucket::Long => &self.long,
            Bucket::Medium => &self.medium,
            Bucket::Short => &self.short,
        }
    }

    pub fn len(&self) -> usize {
        self.long.len() + self.medium.len() + self.short.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keeps `round(rate · |medium|)` medium examples, at least one if any
    /// exist, chosen by `seed`. Order among the kept examples is preserved.
    pub fn subsample_medium(&mut self, rate: f64, seed: u64) {
        let population = self.medium.len();
        let rate = rate.clamp(0.0, 1.0);
        let mut keep = (rate * population as f64).round() as usize;
        if population > 0 && rate > 0.0 {
            keep = keep.max(1);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = sample(&mut rng, population, keep.min(population)).into_vec();
        picked.sort_unstable();
        let old = std::mem::take(&mut self.medium);
        self.medium = picked.into_iter().map(|i| old[i].clone()).collect();
        self.medium_sample = Some(MediumSample { rate, seed, population });
    }
}

/// Splits by the dataset's percentile rule.
pub fn stratify(examples: &[EvalExample], kind: DatasetKind) -> Result<LengthStrata, EvalError> {
    let (lo, hi) = kind.percentiles();
    stratify_at(examples, lo, hi)
}

/// Splits at arbitrary percentile fractions `lo < hi`.
pub fn stratify_at(examples: &[EvalExample], lo: f64, hi: f64) -> Result<LengthStrata, EvalError> {
    if examples.len() < MIN_STRATIFY {
        return Err(EvalError::TooFewExamples {
            needed: MIN_STRATIFY,
            got: examples.len(),
        });
    }
    let lengths: Vec<f64> = examples.iter().map(|e| word_count(&e.question) as f64).collect();
    let mut sorted = lengths.clone();
    sorted.sort_by(f64::total_cmp);
    let short_threshold = quantile_linear(&sorted, lo);
    let long_threshold = quantile_linear(&sorted, hi);

    let mut strata = LengthStrata {
        short_percentile: lo,
        long_percentile: hi,
        short_threshold,
        long_threshold,
        long: Vec::new(),
        medium: Vec::new(),
        short: Vec::new(),
        medium_sample: None,
    };
    for (ex, len) in examples.iter().zip(lengths) {
        if len > long_threshold {
            strata.long.push(ex.clone());
        } else if len < short_threshold {
            strata.short.push(ex.clone());
        } else {
            strata.medium.push(ex.clone());
        }
    }
    Ok(strata)
}
