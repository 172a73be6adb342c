use std::io::Write;

use serde::{Deserialize, Serialize};

use super::analysis::analyze_results;
use super::run::{check_plan, execute_run, fold};
use super::ExperimentPlan;
use crate::dataproc::normalize_to_min;
use crate::output::write_csv;
use crate::par::{map_indexed, Execution};
use crate::sim::InstanceConfig;
use crate::{Error, Result};

/// Trial-level spread of one (func, msize).
#[derive(Debug, Clone, PartialEq)]
pub struct ReproRow {
    pub func: String,
    pub msize: u64,
    /// Mean over runs of the per-run medians, one per trial.
    pub trial_means: Vec<f64>,
    /// `trial_means` divided by their minimum.
    pub normalized: Vec<f64>,
    /// Largest normalized value minus one.
    pub max_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproReport {
    pub ntrial: usize,
    pub rows: Vec<ReproRow>,
}

impl ReproReport {
    pub fn row(&self, func: &str, msize: u64) -> Option<&ReproRow> {
        self.rows.iter().find(|r| r.func == func && r.msize == msize)
    }

    /// One row per (func, msize, trial).
    pub fn points(&self) -> Vec<ReproPoint> {
        self.rows
            .iter()
            .flat_map(|r| {
                (0..r.trial_means.len()).map(move |t| ReproPoint {
                    func: r.func.clone(),
                    msize: r.msize,
                    trial: t,
                    mean_of_medians_s: r.trial_means[t],
                    normalized: r.normalized[t],
                    max_spread: r.max_spread,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproPoint {
    pub func: String,
    pub msize: u64,
    pub trial: usize,
    pub mean_of_medians_s: f64,
    pub normalized: f64,
    pub max_spread: f64,
}

pub const REPRO_COLUMNS: [&str; 6] = ["func", "msize", "trial", "mean_of_medians_s", "normalized", "max_spread"];

/// Runs the whole plan `ntrial` times with independent seed families.
/// Each trial's per-run medians are collapsed to their mean, without a
/// second outlier filter, and the trials are normalized by their minimum.
pub fn reproducibility_trials(plan: &ExperimentPlan, cfg: &InstanceConfig, ntrial: usize, exec: Execution) -> Result<ReproReport> {
    if ntrial < 2 {
        return Err(Error::Config(format!("need at least two trials, got {ntrial}")));
    }
    check_plan(plan, cfg)?;
    let n = plan.n_mpiruns;
    let mut all = map_indexed(ntrial * n, exec, |i| execute_run(plan, cfg, i / n, i % n)).into_iter();
    let analyses: Vec<_> = (0..ntrial)
        .map(|t| analyze_results(&fold(plan, t, all.by_ref().take(n).collect())))
        .collect();
    let mut rows = Vec::new();
    for &msize in &plan.msizes {
        for func in &plan.funcs {
            let trial_means = analyses
                .iter()
                .enumerate()
                .map(|(t, a)| {
                    a.mean_of_medians(func, msize)
                        .ok_or_else(|| Error::EmptySample(format!("trial {t} has no data for {func} at {msize} bytes")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let normalized = normalize_to_min(&trial_means)?;
            let max_spread = normalized.iter().copied().fold(1.0, f64::max) - 1.0;
            rows.push(ReproRow { func: func.clone(), msize, trial_means, normalized, max_spread });
        }
    }
    Ok(ReproReport { ntrial, rows })
}

pub fn write_repro_csv<W: Write>(report: &ReproReport, w: W) -> Result<()> {
    write_csv(&report.points(), &REPRO_COLUMNS, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{ProcessSync, Scheme, SchemeSpec};

    fn plan() -> ExperimentPlan {
        ExperimentPlan::new(
            4,
            2,
            vec![8, 1024],
            vec!["allreduce".into()],
            10,
            SchemeSpec::new(Scheme::Ms1, ProcessSync::OwnBarrier, 1),
        )
    }

    #[test]
    fn noise_free_trials_are_identical() {
        let cfg = InstanceConfig::new(4).noiseless();
        let rep = reproducibility_trials(&plan(), &cfg, 3, Execution::Sequential).unwrap();
        assert_eq!(rep.rows.len(), 2);
        for r in &rep.rows {
            assert!(r.normalized.iter().all(|v| (v - 1.0).abs() < 1e-9), "{:?}", r.normalized);
            assert!(r.max_spread < 1e-9);
        }
        let mut buf = Vec::new();
        write_repro_csv(&rep, &mut buf).unwrap();
        let back: Vec<ReproPoint> =
            csv::Reader::from_reader(&buf[..]).deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(back, rep.points());
        assert_eq!(back.len(), 6);
    }

    #[test]
    fn noisy_trials_spread() {
        let rep = reproducibility_trials(&plan(), &InstanceConfig::new(4), 3, Execution::Sequential).unwrap();
        for r in &rep.rows {
            assert!(r.max_spread > 0.0 && r.max_spread < 0.5, "{}", r.max_spread);
            assert!(r.normalized.contains(&1.0));
        }
    }

    #[test]
    fn needs_two_trials() {
        assert!(reproducibility_trials(&plan(), &InstanceConfig::new(4), 1, Execution::Sequential).is_err());
    }
}
