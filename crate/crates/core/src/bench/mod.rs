//! Measurement machinery for blocking collectives.
//!
//! The four measurement schemes found in MPI benchmark suites, barrier- and
//! window-based process synchronization, completion-time computation and
//! the adaptive loops of SKaMPI and NBCBench. Every measurement is tied to
//! the simulator's ground-truth record of the collective calls it timed.

mod adaptive;
mod barrier;
mod measure;
mod raw;
mod window;

use std::fmt;
use std::ops::{BitOr, BitOrAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clocksync::{SyncConfig, SyncMethod};
use crate::{Error, Result};

pub use adaptive::{
    nbcbench_adaptive_bench, skampi_adaptive_bench, AdaptiveResult, NbcBenchParams, SkampiBenchParams,
};
pub use barrier::{barrier_exit_times, BarrierKind};
pub use measure::{run_scheme, time_mpi_function, Bencher, Measurement, RankLog, SchemeRun};
pub use raw::{write_raw_csv, RawRow, RAW_COLUMNS};
pub(crate) use measure::{assemble, check_collectives};
pub use window::{bcast_lead, initialize_window, Window};

/// Validity flags of one observation, OR-ed over ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Flags(pub u8);

impl Flags {
    pub const NONE: Flags = Flags(0);
    pub const STARTED_LATE: Flags = Flags(1);
    pub const TOOK_TOO_LONG: Flags = Flags(2);

    pub fn contains(self, other: Flags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_valid(self) -> bool {
        self.0 == 0
    }
}

impl BitOr for Flags {
    type Output = Flags;
    fn bitor(self, rhs: Flags) -> Flags {
        Flags(self.0 | rhs.0)
    }
}

impl BitOrAssign for Flags {
    fn bitor_assign(&mut self, rhs: Flags) {
        self.0 |= rhs.0;
    }
}

/// Measurement schemes MS1 to MS4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    /// Synchronize, then time each call individually.
    Ms1,
    /// Time `nrep` back-to-back calls, report the average.
    Ms2,
    /// Time `nrep` calls separated by barriers, report the average.
    Ms3,
    /// Window-based start of each individually timed call.
    Ms4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ms1 => "MS1",
            Scheme::Ms2 => "MS2",
            Scheme::Ms3 => "MS3",
            Scheme::Ms4 => "MS4",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MS1" => Ok(Scheme::Ms1),
            "MS2" => Ok(Scheme::Ms2),
            "MS3" => Ok(Scheme::Ms3),
            "MS4" => Ok(Scheme::Ms4),
            _ => Err(Error::InvalidArgument(format!("unknown scheme `{s}`; expected MS1, MS2, MS3 or MS4"))),
        }
    }
}

/// How processes are aligned before a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProcessSync {
    /// The benchmark's own dissemination barrier.
    OwnBarrier,
    /// The library's barrier, i.e. the synthetic collective `barrier`.
    LibraryBarrier,
    /// Busy-wait for pre-agreed instants of a synchronized global clock.
    Window { method: SyncMethod, win_size: f64 },
}

impl ProcessSync {
    pub fn label(&self) -> String {
        match self {
            ProcessSync::OwnBarrier => "barrier".into(),
            ProcessSync::LibraryBarrier => "library-barrier".into(),
            ProcessSync::Window { method, .. } => method.to_string(),
        }
    }

    pub fn is_window(&self) -> bool {
        matches!(self, ProcessSync::Window { .. })
    }
}

fn yes() -> bool {
    true
}

/// A complete measurement recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub sync: ProcessSync,
    #[serde(default = "default_nrep")]
    pub nrep: usize,
    /// MS2: barrier before the timed loop. MS3: barrier after every call.
    #[serde(default = "yes")]
    pub optional_barrier: bool,
    /// Mark MS2's back-to-back calls as pipelined.
    #[serde(default)]
    pub pipelined: bool,
    /// Under barrier synchronization, additionally synchronize clocks with
    /// this method and record global timestamps.
    #[serde(default)]
    pub timestamps: Option<SyncMethod>,
    #[serde(default)]
    pub root: usize,
    #[serde(default)]
    pub sync_config: SyncConfig,
}

fn default_nrep() -> usize {
    100
}

impl SchemeSpec {
    pub fn new(scheme: Scheme, sync: ProcessSync, nrep: usize) -> Self {
        Self {
            scheme,
            sync,
            nrep,
            optional_barrier: true,
            pipelined: false,
            timestamps: None,
            root: 0,
            sync_config: SyncConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nrep == 0 {
            return Err(Error::Config("nrep must be positive".into()));
        }
        match (self.scheme, self.sync) {
            (Scheme::Ms4, ProcessSync::Window { win_size, .. }) => {
                if !(win_size > 0.0) {
                    return Err(Error::Config(format!("window size must be positive, got {win_size}")));
                }
            }
            (Scheme::Ms4, _) => return Err(Error::Config("MS4 requires window synchronization".into())),
            (_, ProcessSync::Window { .. }) => {
                return Err(Error::Config(format!("{} requires a barrier", self.scheme)));
            }
            _ => {}
        }
        if self.clock_method().is_some() {
            self.sync_config.validate()?;
        }
        Ok(())
    }

    /// Synchronization method whose global clock this spec needs, if any.
    pub fn clock_method(&self) -> Option<SyncMethod> {
        match self.sync {
            ProcessSync::Window { method, .. } => Some(method),
            _ => self.timestamps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_combine() {
        let f = Flags::STARTED_LATE | Flags::TOOK_TOO_LONG;
        assert!(f.contains(Flags::STARTED_LATE) && f.contains(Flags::TOOK_TOO_LONG));
        assert!(!f.is_valid());
        assert!(Flags::NONE.is_valid());
    }

    #[test]
    fn spec_validation() {
        let win = ProcessSync::Window { method: SyncMethod::Hca, win_size: 1e-4 };
        assert!(SchemeSpec::new(Scheme::Ms4, win, 10).validate().is_ok());
        assert!(SchemeSpec::new(Scheme::Ms4, ProcessSync::OwnBarrier, 10).validate().is_err());
        assert!(SchemeSpec::new(Scheme::Ms1, win, 10).validate().is_err());
        assert!(SchemeSpec::new(Scheme::Ms3, ProcessSync::LibraryBarrier, 0).validate().is_err());
        let bad = ProcessSync::Window { method: SyncMethod::Hca, win_size: 0.0 };
        assert!(SchemeSpec::new(Scheme::Ms4, bad, 10).validate().is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::Ms1, Scheme::Ms2, Scheme::Ms3, Scheme::Ms4] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        let spec: SchemeSpec = toml::from_str(
            "scheme = \"MS4\"\nsync = { kind = \"window\", method = \"HCA\", win_size = 1e-3 }\nnrep = 5",
        )
        .unwrap();
        assert_eq!(spec.clock_method(), Some(SyncMethod::Hca));
    }
}
