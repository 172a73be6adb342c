use super::quantile::{quantile, sorted};

/// Output of [`tukey_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct TukeyResult {
    /// Surviving values in their original order.
    pub kept: Vec<f64>,
    /// Number of removed values.
    pub removed: usize,
    /// The sample had fewer than four values and was passed through.
    pub too_small: bool,
}

/// `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]` with type-7 quartiles.
pub fn tukey_bounds(values: &[f64]) -> (f64, f64) {
    let s = sorted(values);
    let q1 = quantile(&s, 0.25);
    let q3 = quantile(&s, 0.75);
    let iqr = q3 - q1;
    (q1 - 1.5 * iqr, q3 + 1.5 * iqr)
}

/// Single-pass Tukey outlier removal.
pub fn tukey_filter(values: &[f64]) -> TukeyResult {
    if values.len() < 4 {
        return TukeyResult { kept: values.to_vec(), removed: 0, too_small: true };
    }
    let (lo, hi) = tukey_bounds(values);
    let kept: Vec<f64> = values.iter().copied().filter(|&v| v >= lo && v <= hi).collect();
    TukeyResult { removed: values.len() - kept.len(), kept, too_small: false }
}
