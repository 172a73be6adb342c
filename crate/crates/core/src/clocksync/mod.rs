//! Clock synchronization algorithms and the model algebra they share.
//!
//! All algorithms run inside a simulated rank program and produce a
//! [`GlobalClock`] per rank. Offset-only schemes (SKaMPI, Netgauge) yield a
//! constant-offset clock; drift-aware schemes (JK, HCA) yield a linear model
//! of `t_local - t_root` as a function of the rank's own time.

mod eval;
mod fit;
mod hca;
mod jk;
mod model;
mod netgauge;
mod rtt;
mod skampi;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use eval::{
    evaluate_sync, measure_global_offsets, write_sync_eval_csv, OffsetEpoch, OffsetProbe, SyncEvaluation,
};
pub use fit::{linear_fit, FitPoint};
pub use hca::{hca_sync, learn_model_hca, set_intercept, HcaIntercepts};
pub use jk::jk_sync;
pub use model::{merge_lms, merge_model_intervals, normalize_time, GlobalClock, LinearModel, ModelInterval};
pub use netgauge::{netgauge_offset, netgauge_sync};
pub use rtt::compute_rtt;
pub use skampi::{skampi_pingpong, skampi_sync};

use crate::sim::Rank;
use crate::{Error, Result};

pub(crate) mod tags {
    pub const RTT: u32 = 100;
    pub const RTT_WARMUP: u32 = 101;
    pub const SKAMPI: u32 = 200;
    pub const NG: u32 = 300;
    pub const NG_DIFFS: u32 = 301;
    pub const NG_SCATTER: u32 = 302;
    pub const NG_REMAINING: u32 = 303;
    pub const JK_FIT: u32 = 400;
    pub const HCA_FIT: u32 = 500;
    pub const HCA_MODELS: u32 = 510;
    pub const HCA_GATHER: u32 = 520;
    pub const HCA_SCATTER: u32 = 530;
    pub const OFFSETS: u32 = 600;
}

/// Tuning knobs shared by the synchronization algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncConfig {
    pub n_fitpts: usize,
    pub n_exchanges: usize,
    pub n_pingpongs: usize,
    /// HCA only: set intercepts pairwise during the tree rounds instead of
    /// directly against root afterwards.
    pub hierarchical_intercepts: bool,
    /// Window size used to place the first window after synchronization.
    pub win_size: f64,
    /// Untimed ping-pongs before each RTT estimation.
    pub warmup_rounds: usize,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            n_fitpts: 1000,
            n_exchanges: 100,
            n_pingpongs: 100,
            hierarchical_intercepts: false,
            win_size: 1e-3,
            warmup_rounds: 10,
        }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fitpts < 2 || self.n_exchanges < 2 || self.n_pingpongs < 2 {
            return Err(Error::Config("sync counts must be at least 2".into()));
        }
        if !(self.win_size > 0.0 && self.win_size.is_finite()) {
            return Err(Error::Config("win_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SyncMethod {
    #[serde(rename = "SKaMPI", alias = "skampi")]
    Skampi,
    #[serde(rename = "Netgauge", alias = "netgauge")]
    Netgauge,
    #[serde(rename = "JK", alias = "jk")]
    Jk,
    #[serde(rename = "HCA", alias = "hca")]
    Hca,
    #[serde(rename = "HCA2", alias = "hca2")]
    Hca2,
}

impl SyncMethod {
    pub const ALL: [SyncMethod; 5] =
        [SyncMethod::Skampi, SyncMethod::Netgauge, SyncMethod::Jk, SyncMethod::Hca, SyncMethod::Hca2];
}

impl fmt::Display for SyncMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyncMethod::Skampi => "SKaMPI",
            SyncMethod::Netgauge => "Netgauge",
            SyncMethod::Jk => "JK",
            SyncMethod::Hca => "HCA",
            SyncMethod::Hca2 => "HCA2",
        })
    }
}

impl FromStr for SyncMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "skampi" => Ok(SyncMethod::Skampi),
            "netgauge" => Ok(SyncMethod::Netgauge),
            "jk" => Ok(SyncMethod::Jk),
            "hca" => Ok(SyncMethod::Hca),
            "hca2" => Ok(SyncMethod::Hca2),
            _ => {
                let valid: Vec<String> = SyncMethod::ALL.iter().map(|m| m.to_string()).collect();
                Err(Error::InvalidArgument(format!("unknown sync method `{s}`; valid methods: {}", valid.join(", "))))
            }
        }
    }
}

/// Runs `method` on this rank and returns its view of global time.
pub async fn synchronize(rk: &Rank, method: SyncMethod, root: usize, cfg: &SyncConfig) -> Result<GlobalClock> {
    if rk.size() < 2 {
        return Ok(GlobalClock::default());
    }
    match method {
        SyncMethod::Skampi => {
            let diffs = skampi_sync(rk, root, cfg).await;
            Ok(GlobalClock::from_offset(-diffs[root]))
        }
        SyncMethod::Netgauge => {
            let myoffset = netgauge_sync(rk, root, cfg).await;
            Ok(GlobalClock::from_offset(-myoffset))
        }
        SyncMethod::Jk => Ok(GlobalClock { origin: 0.0, model: jk_sync(rk, root, cfg).await? }),
        SyncMethod::Hca | SyncMethod::Hca2 => {
            let mode = if method == SyncMethod::Hca2 || cfg.hierarchical_intercepts {
                HcaIntercepts::Hierarchical
            } else {
                HcaIntercepts::Direct
            };
            hca_sync(rk, root, cfg, mode).await
        }
    }
}

/// Local reading minus `origin`.
pub(crate) fn now(rk: &Rank, origin: f64) -> f64 {
    rk.read_clock() - origin
}
