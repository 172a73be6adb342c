use serde::{Deserialize, Serialize};

use super::quantile::{mean, median, std_dev};
use crate::{Error, Result};

const Z95: f64 = 1.959_963_984_540_054;
/// Asymptotic efficiency factor of the median relative to the mean.
const MEDIAN_SE_FACTOR: f64 = 1.253_314_137_315_500_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinStat {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub index: usize,
    /// Index of the first series element in the bin.
    pub start: usize,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Groups consecutive values into bins of `bin_size`, dropping a trailing
/// partial bin. Each bin carries its statistic and a normal-theory 95% CI.
pub fn bin_series(series: &[f64], bin_size: usize, stat: BinStat) -> Result<Vec<Bin>> {
    if bin_size < 2 {
        return Err(Error::InvalidArgument(format!("bin size {bin_size} must be >= 2")));
    }
    Ok(series
        .chunks_exact(bin_size)
        .enumerate()
        .map(|(index, chunk)| {
            let se = std_dev(chunk) / (bin_size as f64).sqrt();
            let (value, half) = match stat {
                BinStat::Mean => (mean(chunk), Z95 * se),
                BinStat::Median => (median(chunk), Z95 * MEDIAN_SE_FACTOR * se),
            };
            Bin { index, start: index * bin_size, value, ci_lo: value - half, ci_hi: value + half }
        })
        .collect())
}
