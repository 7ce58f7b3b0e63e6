//! Runtime benchmark report schema.

use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Wall-clock statistics for one transform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformTiming {
    pub id: String,
    pub transform: String,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub std_ms: f64,
}

/// Per-transform runtime report for one pipeline on one image.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub schema_version: u32,
    pub pipeline: String,
    pub image: String,
    pub height: usize,
    pub width: usize,
    pub iterations: usize,
    /// Host and build context; timings are only comparable within one note.
    pub environment: String,
    pub results: Vec<TransformTiming>,
}

impl RuntimeReport {
    pub fn timing(&self, id: &str) -> Option<&TransformTiming> {
        self.results.iter().find(|t| t.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialize")
    }
}

/// Mean, median, and standard deviation of a sample, in the sample's units.
pub fn summarize(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    (mean, median, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summarize_odd_and_even() {
        let (mean, median, std) = summarize(&[1.0, 2.0, 6.0]);
        assert_eq!(mean, 3.0);
        assert_eq!(median, 2.0);
        assert!((std - (14.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let (_, median, _) = summarize(&[1.0, 2.0, 3.0, 10.0]);
        assert_eq!(median, 2.5);
    }
}
