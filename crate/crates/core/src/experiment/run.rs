use std::io::Write;
use std::rc::Rc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ExperimentPlan;
use crate::bench::{assemble, check_collectives, Bencher, ProcessSync, RankLog, RawRow, SchemeSpec};
use crate::output::write_csv;
use crate::par::{map_indexed, Execution};
use crate::seed::{self, derive_run_seed, streams};
use crate::sim::InstanceConfig;
use crate::{Error, Result};

/// Window size chosen for one (run, func, msize).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowChoice {
    pub mpirun_id: usize,
    pub func: String,
    pub msize: u64,
    pub pilot_s: f64,
    pub win_size_s: f64,
}

pub const WINDOW_COLUMNS: [&str; 5] = ["mpirun_id", "func", "msize", "pilot_s", "win_size_s"];

/// What happened in one `mpirun`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub mpirun_id: usize,
    pub seed: u64,
    /// Execution order after shuffling.
    pub order: Vec<(String, u64)>,
    pub windows: Vec<WindowChoice>,
    pub error: Option<String>,
}

/// Raw observations of every run, in (run, execution order, obs) order.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResults {
    pub plan: ExperimentPlan,
    pub trial: usize,
    pub rows: Vec<RawRow>,
    pub runs: Vec<RunOutcome>,
}

impl BenchmarkResults {
    pub fn failed_runs(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter(|r| r.error.is_some())
    }

    pub fn windows(&self) -> Vec<WindowChoice> {
        self.runs.iter().flat_map(|r| r.windows.iter().cloned()).collect()
    }
}

type RankResult = Result<Vec<(RankLog, SchemeSpec, f64)>>;

async fn rank_program(mut b: Bencher, base: SchemeSpec, order: Rc<Vec<(String, u64)>>, plan: Rc<ExperimentPlan>) -> RankResult {
    let mut out = Vec::with_capacity(order.len());
    for (func, msize) in order.iter() {
        let mut spec = base.clone();
        let mut pilot = f64::NAN;
        if let (ProcessSync::Window { method, .. }, Some(factor)) = (spec.sync, plan.auto_window) {
            pilot = b.pilot(func, *msize, plan.pilot_nrep).await;
            spec.sync = ProcessSync::Window { method, win_size: (factor * pilot).max(1e-9) };
        }
        let log = b.measure(&spec, func, *msize).await?;
        out.push((log, spec, pilot));
    }
    Ok(out)
}

pub(crate) fn execute_run(plan: &ExperimentPlan, cfg: &InstanceConfig, trial: usize, run: usize) -> (RunOutcome, Vec<RawRow>) {
    let seed = derive_run_seed(plan.master_seed, run as u64, trial as u64);
    let mut order = plan.experiments();
    order.shuffle(&mut seed::rng(seed, streams::SHUFFLE));
    let mut outcome = RunOutcome { mpirun_id: run, seed, order: order.clone(), windows: Vec::new(), error: None };
    match measure_run(plan, cfg, seed, order, run) {
        Ok((rows, windows)) => {
            outcome.windows = windows;
            (outcome, rows)
        }
        Err(e) => {
            outcome.error = Some(e.to_string());
            (outcome, Vec::new())
        }
    }
}

fn measure_run(
    plan: &ExperimentPlan,
    cfg: &InstanceConfig,
    seed: u64,
    order: Vec<(String, u64)>,
    run: usize,
) -> Result<(Vec<RawRow>, Vec<WindowChoice>)> {
    let inst = cfg.instantiate(seed)?;
    let base = plan.spec();
    for (f, _) in &order {
        check_collectives(&inst, &base, f)?;
    }
    let order = Rc::new(order);
    let shared = Rc::new(plan.clone());
    let out = inst.run(|rk| {
        let b = Bencher::new(rk, base.root);
        rank_program(b, base.clone(), order.clone(), shared.clone())
    })?;
    let mut per_rank = Vec::with_capacity(inst.p);
    for r in out.results {
        per_rank.push(r?);
    }
    let mut rows = Vec::new();
    let mut windows = Vec::new();
    for (k, (func, msize)) in order.iter().enumerate() {
        let logs: Vec<RankLog> = per_rank.iter().map(|v| v[k].0.clone()).collect();
        let (_, spec, pilot) = &per_rank[plan.scheme.root][k];
        if let ProcessSync::Window { win_size, .. } = spec.sync {
            windows.push(WindowChoice { mpirun_id: run, func: func.clone(), msize: *msize, pilot_s: *pilot, win_size_s: win_size });
        }
        for m in assemble(spec, &logs, &out.collectives)? {
            rows.push(RawRow {
                mpirun_id: run,
                func: func.clone(),
                msize: *msize,
                p: inst.p,
                obs: m.obs,
                runtime_s: m.runtime,
                valid: m.is_valid(),
                ground_truth_s: m.ground_truth,
                scheme: spec.scheme.to_string(),
                sync_method: spec.sync.label(),
            });
        }
    }
    Ok((rows, windows))
}

pub(crate) fn check_plan(plan: &ExperimentPlan, cfg: &InstanceConfig) -> Result<()> {
    plan.validate()?;
    cfg.validate()?;
    if plan.p != cfg.p {
        return Err(Error::Config(format!("plan is for p = {} but the instance has p = {}", plan.p, cfg.p)));
    }
    let mut needed: Vec<&str> = plan.funcs.iter().map(String::as_str).collect();
    if plan.scheme.sync == ProcessSync::LibraryBarrier {
        needed.push("barrier");
    }
    match needed.into_iter().find(|f| !cfg.collective.contains_key(*f)) {
        Some(f) => Err(Error::UnknownCollective(f.to_string())),
        None => Ok(()),
    }
}

/// Runs every `mpirun` of `plan` as reproducibility trial `trial`. A run
/// that fails is recorded in its [`RunOutcome`] and contributes no rows.
pub fn run_benchmark_trial(plan: &ExperimentPlan, cfg: &InstanceConfig, trial: usize, exec: Execution) -> Result<BenchmarkResults> {
    check_plan(plan, cfg)?;
    let runs = map_indexed(plan.n_mpiruns, exec, |r| execute_run(plan, cfg, trial, r));
    Ok(fold(plan, trial, runs))
}

pub(crate) fn fold(plan: &ExperimentPlan, trial: usize, runs: Vec<(RunOutcome, Vec<RawRow>)>) -> BenchmarkResults {
    let mut res = BenchmarkResults { plan: plan.clone(), trial, rows: Vec::new(), runs: Vec::with_capacity(runs.len()) };
    for (o, rows) in runs {
        res.rows.extend(rows);
        res.runs.push(o);
    }
    res
}

/// Randomized multi-`mpirun` benchmark: each run is a fresh instance with
/// its own seed, executes the shuffled (msize × func) list in a single
/// simulation and emits every observation tagged with its run index.
pub fn run_benchmark(plan: &ExperimentPlan, cfg: &InstanceConfig, exec: Execution) -> Result<BenchmarkResults> {
    run_benchmark_trial(plan, cfg, 0, exec)
}

pub fn write_window_csv<W: Write>(windows: &[WindowChoice], w: W) -> Result<()> {
    write_csv(windows, &WINDOW_COLUMNS, w)
}
