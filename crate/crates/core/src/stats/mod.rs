//! Hypothesis tests and diagnostics for benchmark samples.

mod autocorr;
mod ci;
mod ks;
mod rank;
mod wilcoxon;

pub use autocorr::{autocorrelation, AutocorrResult};
pub use ci::{mean_ci, MeanCi};
pub use ks::ks_normality;
pub use rank::{midranks, spearman};
pub use wilcoxon::{stars, stars_str, wilcoxon_rank_sum};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Less,
    Greater,
}

impl std::fmt::Display for Alternative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Less => "less",
            Alternative::Greater => "greater",
        })
    }
}

impl std::str::FromStr for Alternative {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "two-sided" | "two_sided" | "twosided" => Ok(Alternative::TwoSided),
            "less" => Ok(Alternative::Less),
            "greater" => Ok(Alternative::Greater),
            _ => Err(crate::Error::InvalidArgument(format!(
                "unknown alternative {s:?}; expected two-sided, less or greater"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
    /// KS against a normal with estimated parameters.
    Lilliefors,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alternative: Alternative,
    pub method: TestMethod,
}
