//! Multi-`mpirun` experiments: randomized benchmark runs over fresh
//! simulation instances, per-run reduction, library comparison and
//! reproducibility trials.
//!
//! Every `mpirun` is a new [`SimInstance`](crate::sim::SimInstance) whose seed is
//! derived from the plan's master seed, the run index and the trial index.
//! Runs are independent, may execute in parallel, and are always folded back
//! in index order.

mod analysis;
mod repro;
mod run;
mod studies;

pub use analysis::{
    analyze_results, compare_libraries, write_comparison_csv, write_summary_csv, Analysis, ComparisonRow,
    ComparisonTable, SummaryRecord, COMPARISON_COLUMNS, SUMMARY_COLUMNS,
};
pub use repro::{reproducibility_trials, write_repro_csv, ReproPoint, ReproReport, ReproRow, REPRO_COLUMNS};
pub use run::{
    run_benchmark, run_benchmark_trial, write_window_csv, BenchmarkResults, RunOutcome, WindowChoice,
    WINDOW_COLUMNS,
};
pub use studies::{
    barrier_completion_gap, barrier_exit_profile, mpirun_means, window_sweep, write_window_sweep_csv,
    CompletionGap, ExitProfileRow, MpirunMeans, WindowSweepRow, WINDOW_SWEEP_COLUMNS,
};

use serde::{Deserialize, Serialize};

use crate::bench::{ProcessSync, Scheme, SchemeSpec};
use crate::{Error, Result};

fn default_auto_window() -> Option<f64> {
    Some(5.0)
}

fn default_pilot() -> usize {
    10
}

/// A complete benchmark design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub p: usize,
    pub n_mpiruns: usize,
    pub msizes: Vec<u64>,
    pub funcs: Vec<String>,
    /// Observations per (func, msize) and run. Replaces `scheme.nrep`.
    pub nrep: usize,
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub master_seed: u64,
    /// For window schemes, set the window of each (func, msize) to this
    /// multiple of a pilot median. `None` keeps the configured size.
    #[serde(default = "default_auto_window")]
    pub auto_window: Option<f64>,
    /// Calls in the window pilot.
    #[serde(default = "default_pilot")]
    pub pilot_nrep: usize,
}

impl ExperimentPlan {
    pub fn new(p: usize, n_mpiruns: usize, msizes: Vec<u64>, funcs: Vec<String>, nrep: usize, scheme: SchemeSpec) -> Self {
        Self {
            p,
            n_mpiruns,
            msizes,
            funcs,
            nrep,
            scheme,
            master_seed: 0,
            auto_window: default_auto_window(),
            pilot_nrep: default_pilot(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("p must be positive".into()));
        }
        if self.n_mpiruns == 0 {
            return Err(Error::Config("n_mpiruns must be at least 1".into()));
        }
        if self.msizes.is_empty() || self.funcs.is_empty() {
            return Err(Error::Config("plan needs at least one message size and one function".into()));
        }
        if let Some(f) = self.auto_window {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("auto window factor must be positive, got {f}")));
            }
        }
        if self.pilot_nrep == 0 {
            return Err(Error::Config("pilot_nrep must be positive".into()));
        }
        self.spec().validate()
    }

    /// The measurement recipe with the plan's `nrep`.
    pub fn spec(&self) -> SchemeSpec {
        SchemeSpec { nrep: self.nrep, ..self.scheme.clone() }
    }

    /// Observations each run yields per (func, msize).
    pub fn obs_per_run(&self) -> usize {
        match self.scheme.scheme {
            Scheme::Ms1 | Scheme::Ms4 => self.nrep,
            Scheme::Ms2 | Scheme::Ms3 => 1,
        }
    }

    /// `(func, msize)` list in canonical order, before shuffling.
    pub fn experiments(&self) -> Vec<(String, u64)> {
        self.msizes.iter().flat_map(|&m| self.funcs.iter().map(move |f| (f.clone(), m))).collect()
    }

    /// The conventional single-launch design: one run, library barrier,
    /// the mean of `nrep` back-to-back calls.
    pub fn imb_baseline(&self) -> Self {
        let mut scheme = SchemeSpec::new(Scheme::Ms2, ProcessSync::LibraryBarrier, self.nrep);
        scheme.root = self.scheme.root;
        Self { n_mpiruns: 1, scheme, auto_window: None, ..self.clone() }
    }

    /// Whether two plans describe the same design, ignoring seeds.
    pub fn same_design(&self, other: &Self) -> bool {
        Self { master_seed: 0, ..self.clone() } == Self { master_seed: 0, ..other.clone() }
    }
}
