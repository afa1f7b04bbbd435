use serde::{Deserialize, Serialize};

use super::dataset::DatasetKind;
use super::strata::Bucket;

/// Scores for one bucket, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    pub bucket: Bucket,
    pub count: usize,
    pub em: f64,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dataset: DatasetKind,
    /// Reproducibility header: `key = value` lines, typically the full
    /// serialized run configuration.
    pub header: Vec<String>,
    pub buckets: Vec<BucketScore>,
}

/// Count-weighted mean of the bucket scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overall {
    pub count: usize,
    pub em: f64,
    pub f1: Option<f64>,
}

impl Report {
    pub fn overall(&self) -> Overall {
        let count: usize = self.buckets.iter().map(|b| b.count).sum();
        if count == 0 {
            return Overall { count, em: 0.0, f1: self.dataset.reports_f1().then_some(0.0) };
        }
        let weighted = |f: &dyn Fn(&BucketScore) -> f64| {
            self.buckets.iter().map(|b| f(b) * b.count as f64).sum::<f64>() / count as f64
        };
        let em = weighted(&|b| b.em);
        let f1 = (self.dataset.reports_f1() && self.buckets.iter().all(|b| b.f1.is_some()))
            .then(|| weighted(&|b| b.f1.unwrap_or(0.0)));
        Overall { count, em, f1 }
    }

    fn rows(&self) -> Vec<(String, usize, f64, Option<f64>)> {
        let o = self.overall();
        let mut rows = vec![("Overall".to_string(), o.count, o.em, o.f1)];
        rows.extend(self.buckets.iter().map(|b| (b.bucket.title().to_string(), b.count, b.em, b.f1)));
        rows
    }

    fn header_block(&self, prefix: &str) -> String {
        let mut out = format!("{prefix}dataset = {}\n", self.dataset);
        for line in &self.header {
            out.push_str(prefix);
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let f1 = self.dataset.reports_f1();
        let mut out = self.header_block("# ");
        out.push_str(&format!("{:<8} {:>6} {:>7}", "bucket", "n", "EM"));
        if f1 {
            out.push_str(&format!(" {:>7}", "F1"));
        }
        out.push('\n');
        for (name, n, em, f) in self.rows() {
            out.push_str(&format!("{name:<8} {n:>6} {em:>7.2}"));
            if f1 {
                out.push_str(&format!(" {:>7.2}", f.unwrap_or(0.0)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let f1 = self.dataset.reports_f1();
        let mut out = self.header_block("# ");
        out.push_str(if f1 { "bucket,n,em,f1\n" } else { "bucket,n,em\n" });
        for (name, n, em, f) in self.rows() {
            out.push_str(&format!("{},{n},{em:.4}", name.to_lowercase()));
            if f1 {
                out.push_str(&format!(",{:.4}", f.unwrap_or(0.0)));
            }
            out.push('\n');
        }
        out
    }
}
