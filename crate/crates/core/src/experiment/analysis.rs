use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::run::BenchmarkResults;
use super::ExperimentPlan;
use crate::dataproc::{median, summarize};
use crate::output::write_csv;
use crate::stats::{stars_str, wilcoxon_rank_sum, Alternative};
use crate::{Error, Result};

/// Tukey-filtered statistics of one (msize, func, run) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub func: String,
    pub msize: u64,
    pub p: usize,
    pub mpirun_id: usize,
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

pub const SUMMARY_COLUMNS: [&str; 13] =
    ["func", "msize", "p", "mpirun_id", "n_raw", "n_kept", "mean", "median", "min", "max", "q1", "q3", "std_err"];

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub plan: ExperimentPlan,
    /// Ordered by msize, then func, then run, following the plan's lists.
    pub rows: Vec<SummaryRecord>,
}

impl Analysis {
    /// Per-run medians of one (func, msize), skipping empty groups.
    pub fn medians(&self, func: &str, msize: u64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.func == func && r.msize == msize).filter_map(|r| r.median).collect()
    }

    /// Mean of the per-run medians, or `None` if no run produced data.
    pub fn mean_of_medians(&self, func: &str, msize: u64) -> Option<f64> {
        let m = self.medians(func, msize);
        (!m.is_empty()).then(|| m.iter().sum::<f64>() / m.len() as f64)
    }
}

/// Reduces raw observations: invalid observations are dropped, then each
/// group is Tukey-filtered and summarized. Groups without data still get a
/// row with `n_kept = 0`.
pub fn analyze_results(raw: &BenchmarkResults) -> Analysis {
    let plan = &raw.plan;
    let mut groups: BTreeMap<(&str, u64, usize), Vec<f64>> = BTreeMap::new();
    for r in raw.rows.iter().filter(|r| r.valid) {
        groups.entry((r.func.as_str(), r.msize, r.mpirun_id)).or_default().push(r.runtime_s);
    }
    let mut rows = Vec::with_capacity(plan.msizes.len() * plan.funcs.len() * plan.n_mpiruns);
    for &msize in &plan.msizes {
        for func in &plan.funcs {
            for run in 0..plan.n_mpiruns {
                let sample = groups.get(&(func.as_str(), msize, run)).map_or(&[][..], |v| v.as_slice());
                let s = summarize(sample, true);
                rows.push(SummaryRecord {
                    func: func.clone(),
                    msize,
                    p: plan.p,
                    mpirun_id: run,
                    n_raw: s.n_raw,
                    n_kept: s.n_kept,
                    mean: s.mean,
                    median: s.median,
                    min: s.min,
                    max: s.max,
                    q1: s.q1,
                    q3: s.q3,
                    std_err: s.std_err,
                });
            }
        }
    }
    Analysis { plan: plan.clone(), rows }
}

/// One (func, msize) verdict of a library comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub func: String,
    pub msize: u64,
    pub n_a: usize,
    pub n_b: usize,
    pub median_a: f64,
    pub median_b: f64,
    pub p_value: f64,
    pub stars: String,
    #[serde(skip)]
    pub medians_a: Vec<f64>,
    #[serde(skip)]
    pub medians_b: Vec<f64>,
}

pub const COMPARISON_COLUMNS: [&str; 8] = ["func", "msize", "n_a", "n_b", "median_a", "median_b", "p_value", "stars"];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub alternative: Alternative,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn starred(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| !r.stars.is_empty())
    }
}

/// Rank-sum test on the per-run medians of `a` and `b` for every
/// (func, msize). `Less` asks whether `a` is faster.
pub fn compare_libraries(a: &Analysis, b: &Analysis, alternative: Alternative) -> Result<ComparisonTable> {
    if !a.plan.same_design(&b.plan) {
        return Err(Error::PlanMismatch("designs differ in more than their seeds".into()));
    }
    let mut rows = Vec::new();
    for &msize in &a.plan.msizes {
        for func in &a.plan.funcs {
            let ma = a.medians(func, msize);
            let mb = b.medians(func, msize);
            let t = wilcoxon_rank_sum(&ma, &mb, alternative)
                .map_err(|e| Error::EmptySample(format!("{func} at {msize} bytes: {e}")))?;
            rows.push(ComparisonRow {
                func: func.clone(),
                msize,
                n_a: ma.len(),
                n_b: mb.len(),
                median_a: median(&ma),
                median_b: median(&mb),
                p_value: t.p_value,
                stars: stars_str(t.p_value).to_string(),
                medians_a: ma,
                medians_b: mb,
            });
        }
    }
    Ok(ComparisonTable { alternative, rows })
}

pub fn write_summary_csv<W: Write>(analysis: &Analysis, w: W) -> Result<()> {
    write_csv(&analysis.rows, &SUMMARY_COLUMNS, w)
}

pub fn write_comparison_csv<W: Write>(table: &ComparisonTable, w: W) -> Result<()> {
    write_csv(&table.rows, &COMPARISON_COLUMNS, w)
}
