use serde::Serialize;

use super::quantile::{mean, median, quantile, sorted, std_dev};
use super::tukey::tukey_filter;
use crate::{Error, Result};

/// Descriptive statistics of one group after outlier filtering. The
/// statistics are `None` when nothing survived.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n_raw: usize,
    pub n_kept: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub std_err: Option<f64>,
}

impl SummaryRow {
    /// `min <= q1 <= median <= q3 <= max`, vacuously true for empty rows.
    pub fn is_ordered(&self) -> bool {
        match (self.min, self.q1, self.median, self.q3, self.max) {
            (Some(a), Some(b), Some(c), Some(d), Some(e)) => a <= b && b <= c && c <= d && d <= e,
            _ => self.n_kept == 0,
        }
    }
}

/// Summarizes `raw`, Tukey-filtering first when `filter` is set.
pub fn summarize(raw: &[f64], filter: bool) -> SummaryRow {
    let kept = if filter { tukey_filter(raw).kept } else { raw.to_vec() };
    if kept.is_empty() {
        return SummaryRow {
            n_raw: raw.len(),
            n_kept: 0,
            mean: None,
            median: None,
            min: None,
            max: None,
            q1: None,
            q3: None,
            std_err: None,
        };
    }
    let s = sorted(&kept);
    let n = s.len();
    SummaryRow {
        n_raw: raw.len(),
        n_kept: n,
        mean: Some(mean(&s)),
        median: Some(median(&s)),
        min: Some(s[0]),
        max: Some(s[n - 1]),
        q1: Some(quantile(&s, 0.25)),
        q3: Some(quantile(&s, 0.75)),
        std_err: Some(std_dev(&s) / (n as f64).sqrt()),
    }
}

/// Divides every value by the sample minimum.
pub fn normalize_to_min(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySample("nothing to normalize".into()));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("cannot normalize non-positive value {bad}")));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(values.iter().map(|v| v / min).collect())
}
