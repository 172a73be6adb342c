use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use benchlab::bench::write_raw_csv;
use benchlab::clocksync::{evaluate_sync, write_sync_eval_csv, SyncConfig, SyncEvaluation, SyncMethod};
use benchlab::dataproc::median;
use benchlab::experiment::{
    analyze_results, compare_libraries, reproducibility_trials, run_benchmark, write_comparison_csv, write_repro_csv,
    write_summary_csv, write_window_csv, Analysis, ComparisonTable, ReproReport,
};
use benchlab::output::{write_atomic, write_csv};
use benchlab::par::{map_indexed, Execution};
use benchlab::seed::derive_run_seed;
use benchlab::stats::Alternative;
use benchlab::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

fn us(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{:.3}", x * 1e6))
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

/// Mean of per-run medians for every (func, msize) of an analysis.
pub fn summary_table(a: &Analysis) -> String {
    let mut s = format!("{:<12} {:>10} {:>6} {:>14} {:>14}\n", "func", "msize", "runs", "mean_med_us", "min_med_us");
    for &m in &a.plan.msizes {
        for f in &a.plan.funcs {
            let med = a.medians(f, m);
            let min = med.iter().copied().reduce(f64::min);
            let _ = writeln!(s, "{:<12} {:>10} {:>6} {:>14} {:>14}", f, m, med.len(), us(a.mean_of_medians(f, m)), us(min));
        }
    }
    s
}

fn missing_groups(a: &Analysis) -> Vec<String> {
    let mut out = Vec::new();
    for &m in &a.plan.msizes {
        for f in &a.plan.funcs {
            if a.medians(f, m).is_empty() {
                out.push(format!("{f}/{m}"));
            }
        }
    }
    out
}

pub fn bench(cfg: &RunConfig, out: &Path, exec: Execution) -> Result<String> {
    let plan = cfg.plan()?;
    let res = run_benchmark(plan, &cfg.instance, exec)?;
    for r in res.failed_runs() {
        eprintln!("warning: mpirun {} failed: {}", r.mpirun_id, r.error.as_deref().unwrap_or(""));
    }
    let a = analyze_results(&res);
    prepare(out)?;
    write_atomic(&out.join("raw.csv"), |w| write_raw_csv(&res.rows, w))?;
    write_atomic(&out.join("summary.csv"), |w| write_summary_csv(&a, w))?;
    write_atomic(&out.join("windows.csv"), |w| write_window_csv(&res.windows(), w))?;
    let missing = missing_groups(&a);
    if !missing.is_empty() {
        return Err(Error::EmptySample(format!("no valid observations for {}", missing.join(", "))));
    }
    Ok(summary_table(&a))
}

pub fn comparison_table(t: &ComparisonTable) -> String {
    let mut s = format!(
        "{:<12} {:>10} {:>14} {:>14} {:>12} {:>5}\n",
        "func", "msize", "median_a_us", "median_b_us", "p_value", "sig"
    );
    for r in &t.rows {
        let _ = writeln!(
            s,
            "{:<12} {:>10} {:>14} {:>14} {:>12.4e} {:>5}",
            r.func,
            r.msize,
            us(Some(r.median_a)),
            us(Some(r.median_b)),
            r.p_value,
            r.stars
        );
    }
    let _ = writeln!(s, "alternative: {}; * p <= 0.05, ** p <= 0.01, *** p <= 0.001", t.alternative);
    s
}

pub fn compare(a: &RunConfig, b: &RunConfig, alternative: Alternative, out: &Path, exec: Execution) -> Result<String> {
    let (pa, pb) = (a.plan()?, b.plan()?);
    if !pa.same_design(pb) {
        return Err(Error::PlanMismatch("the two configurations use different plans".into()));
    }
    let ra = analyze_results(&run_benchmark(pa, &a.instance, exec)?);
    let rb = analyze_results(&run_benchmark(pb, &b.instance, exec)?);
    let t = compare_libraries(&ra, &rb, alternative)?;
    prepare(out)?;
    write_atomic(&out.join("summary_a.csv"), |w| write_summary_csv(&ra, w))?;
    write_atomic(&out.join("summary_b.csv"), |w| write_summary_csv(&rb, w))?;
    write_atomic(&out.join("comparison.csv"), |w| write_comparison_csv(&t, w))?;
    Ok(comparison_table(&t))
}

pub fn repro_table(ours: &ReproReport, base: &ReproReport) -> String {
    let mut s = format!("{:<12} {:>10} {:>16} {:>18}\n", "func", "msize", "max_spread_pct", "baseline_spread_pct");
    for r in &ours.rows {
        let b = base.row(&r.func, r.msize).map_or(f64::NAN, |b| b.max_spread);
        let _ = writeln!(s, "{:<12} {:>10} {:>16.3} {:>18.3}", r.func, r.msize, 100.0 * r.max_spread, 100.0 * b);
    }
    s
}

pub fn repro(cfg: &RunConfig, out: &Path, exec: Execution) -> Result<String> {
    let plan = cfg.plan()?;
    let n = cfg.report.ntrial;
    let ours = reproducibility_trials(plan, &cfg.instance, n, exec)?;
    let base = reproducibility_trials(&plan.imb_baseline(), &cfg.instance, n, exec)?;
    prepare(out)?;
    write_atomic(&out.join("repro.csv"), |w| write_repro_csv(&ours, w))?;
    write_atomic(&out.join("repro_baseline.csv"), |w| write_repro_csv(&base, w))?;
    Ok(repro_table(&ours, &base))
}

/// One point of the offset-against-duration trade-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub method: String,
    pub n_fitpts: usize,
    pub n_exchanges: usize,
    pub seeds: usize,
    pub median_sync_duration_s: f64,
    pub median_offset_s: f64,
    pub horizon_s: f64,
}

pub const PARETO_COLUMNS: [&str; 7] =
    ["method", "n_fitpts", "n_exchanges", "seeds", "median_sync_duration_s", "median_offset_s", "horizon_s"];

pub fn sync_eval(cfg: &RunConfig, methods: &[SyncMethod], out: &Path, exec: Execution) -> Result<String> {
    if methods.is_empty() {
        return Err(Error::Config("no synchronization methods selected".into()));
    }
    let se = &cfg.sync_eval;
    let base_seed = cfg.instance.base_seed();
    let mut jobs = Vec::new();
    for &m in methods {
        for &(f, x) in &se.grid {
            for s in 0..se.seeds {
                jobs.push((m, f, x, s));
            }
        }
    }
    let probe = (se.probe.nsteps > 0).then_some(se.probe);
    let evals: Vec<SyncEvaluation> = map_indexed(jobs.len(), exec, |i| {
        let (m, f, x, s) = jobs[i];
        let inst = cfg.instance.instantiate(derive_run_seed(base_seed, s as u64, 0))?;
        let sc = SyncConfig { n_fitpts: f, n_exchanges: x, ..se.base };
        evaluate_sync(&inst, m, se.root, &sc, probe)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (chunk, job) in evals.chunks(se.seeds).zip(jobs.chunks(se.seeds)) {
        let (m, f, x, _) = job[0];
        let d: Vec<f64> = chunk.iter().map(|e| e.sync_duration).collect();
        let o: Vec<f64> = chunk.iter().map(|e| e.median_abs_error_after(se.horizon)).collect();
        rows.push(ParetoRow {
            method: m.to_string(),
            n_fitpts: f,
            n_exchanges: x,
            seeds: se.seeds,
            median_sync_duration_s: median(&d),
            median_offset_s: median(&o),
            horizon_s: se.horizon,
        });
    }
    prepare(out)?;
    write_atomic(&out.join("sync_pareto.csv"), |w| write_csv(&rows, &PARETO_COLUMNS, w))?;
    write_atomic(&out.join("sync_offsets.csv"), |w| write_sync_eval_csv(&evals, w))?;
    let mut s = format!("{:<9} {:>8} {:>11} {:>14} {:>16}\n", "method", "fitpts", "exchanges", "duration_ms", "offset_us");
    for r in &rows {
        let _ = writeln!(
            s,
            "{:<9} {:>8} {:>11} {:>14.3} {:>16.3}",
            r.method,
            r.n_fitpts,
            r.n_exchanges,
            r.median_sync_duration_s * 1e3,
            r.median_offset_s * 1e6
        );
    }
    Ok(s)
}
