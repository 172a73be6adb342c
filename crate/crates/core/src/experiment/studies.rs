use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bench::{assemble, check_collectives, run_scheme, Bencher, ProcessSync, Scheme, SchemeSpec};
use crate::clocksync::{SyncConfig, SyncMethod};
use crate::dataproc::mean;
use crate::output::write_csv;
use crate::par::{map_indexed, Execution};
use crate::seed::derive_run_seed;
use crate::sim::{comm, InstanceConfig};
use crate::stats::{mean_ci, MeanCi};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSweepRow {
    pub seed: u64,
    pub win_size_s: f64,
    pub n: usize,
    pub n_invalid: usize,
    pub invalid_fraction: f64,
    /// Mean run-time of the valid observations, if any.
    pub mean_valid_s: Option<f64>,
}

pub const WINDOW_SWEEP_COLUMNS: [&str; 6] = ["seed", "win_size_s", "n", "n_invalid", "invalid_fraction", "mean_valid_s"];

/// Measures `func(msize)` with window synchronization once per window size,
/// all within one simulation and after a single clock synchronization.
#[allow(clippy::too_many_arguments)]
pub fn window_sweep(
    cfg: &InstanceConfig,
    seed: u64,
    func: &str,
    msize: u64,
    win_sizes: &[f64],
    nrep: usize,
    method: SyncMethod,
    sync_config: &SyncConfig,
) -> Result<Vec<WindowSweepRow>> {
    let inst = cfg.instantiate(seed)?;
    let specs: Vec<SchemeSpec> = win_sizes
        .iter()
        .map(|&w| SchemeSpec {
            sync_config: *sync_config,
            ..SchemeSpec::new(Scheme::Ms4, ProcessSync::Window { method, win_size: w }, nrep)
        })
        .collect();
    for s in &specs {
        s.validate()?;
        check_collectives(&inst, s, func)?;
    }
    let out = inst.run(|rk| {
        let specs = specs.clone();
        let func = func.to_string();
        async move {
            let mut b = Bencher::new(rk, 0);
            let mut logs = Vec::with_capacity(specs.len());
            for s in &specs {
                logs.push(b.measure(s, &func, msize).await?);
            }
            Ok::<_, Error>(logs)
        }
    })?;
    let per_rank = out.results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(specs.len());
    for (k, s) in specs.iter().enumerate() {
        let logs: Vec<_> = per_rank.iter().map(|v| v[k].clone()).collect();
        let ms = assemble(s, &logs, &out.collectives)?;
        let valid: Vec<f64> = ms.iter().filter(|m| m.is_valid()).map(|m| m.runtime).collect();
        let n_invalid = ms.len() - valid.len();
        rows.push(WindowSweepRow {
            seed,
            win_size_s: win_sizes[k],
            n: ms.len(),
            n_invalid,
            invalid_fraction: n_invalid as f64 / ms.len() as f64,
            mean_valid_s: (!valid.is_empty()).then(|| mean(&valid)),
        });
    }
    Ok(rows)
}

pub fn write_window_sweep_csv<W: Write>(rows: &[WindowSweepRow], w: W) -> Result<()> {
    write_csv(rows, &WINDOW_SWEEP_COLUMNS, w)
}

/// Local-time against global-time completion under the library barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletionGap {
    pub n: usize,
    pub mean_local_s: f64,
    pub mean_global_s: f64,
    pub mean_ground_truth_s: f64,
}

impl CompletionGap {
    /// Global-time mean minus local-time mean.
    pub fn gap(&self) -> f64 {
        self.mean_global_s - self.mean_local_s
    }
}

/// Times `func(msize)` after every library barrier and evaluates each
/// observation both ways: the longest local duration and the global span
/// from the first start to the last end.
#[allow(clippy::too_many_arguments)]
pub fn barrier_completion_gap(
    cfg: &InstanceConfig,
    seed: u64,
    func: &str,
    msize: u64,
    nrep: usize,
    method: SyncMethod,
    sync_config: &SyncConfig,
) -> Result<CompletionGap> {
    let inst = cfg.instantiate(seed)?;
    let mut spec = SchemeSpec::new(Scheme::Ms1, ProcessSync::LibraryBarrier, nrep);
    spec.timestamps = Some(method);
    spec.sync_config = *sync_config;
    let run = run_scheme(&inst, &spec, func, msize)?;
    let local: Vec<f64> = run.measurements.iter().map(|m| m.local_completion()).collect();
    let global: Vec<f64> = run.measurements.iter().filter_map(|m| m.global_completion()).collect();
    let truth: Vec<f64> = run.measurements.iter().map(|m| m.ground_truth).collect();
    if local.is_empty() || global.len() != local.len() {
        return Err(Error::EmptySample("no complete observations".into()));
    }
    Ok(CompletionGap {
        n: local.len(),
        mean_local_s: mean(&local),
        mean_global_s: mean(&global),
        mean_ground_truth_s: mean(&truth),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitProfileRow {
    pub rank: usize,
    /// Mean true exit time relative to rank 0.
    pub mean_delay_s: f64,
    pub ci_lo_s: f64,
    pub ci_hi_s: f64,
}

/// Mean exit delay of every rank relative to rank 0 over `nrep` library
/// barriers, each entered right after a dissemination barrier.
pub fn barrier_exit_profile(cfg: &InstanceConfig, seed: u64, nrep: usize) -> Result<Vec<ExitProfileRow>> {
    if nrep < 2 {
        return Err(Error::InvalidArgument("exit profile needs nrep >= 2".into()));
    }
    let inst = cfg.instantiate(seed)?;
    if !inst.collectives.contains_key("barrier") {
        return Err(Error::UnknownCollective("barrier".into()));
    }
    let out = inst.run(|rk| async move {
        let mut exits = Vec::with_capacity(nrep);
        for _ in 0..nrep {
            comm::barrier(&rk).await;
            exits.push(rk.collective("barrier", 0).await);
        }
        exits
    })?;
    let ex = &out.results;
    (0..inst.p)
        .map(|r| {
            let d: Vec<f64> = (0..nrep).map(|i| ex[r][i] - ex[0][i]).collect();
            let ci = if r == 0 { MeanCi { mean: 0.0, lo: 0.0, hi: 0.0, half_width: 0.0 } } else { mean_ci(&d, 0.95)? };
            Ok(ExitProfileRow { rank: r, mean_delay_s: ci.mean, ci_lo_s: ci.lo, ci_hi_s: ci.hi })
        })
        .collect()
}

/// Per-instance means with confidence intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct MpirunMeans {
    pub seeds: Vec<u64>,
    pub cis: Vec<MeanCi>,
}

impl MpirunMeans {
    /// Share of instance pairs whose intervals do not overlap.
    pub fn separated_fraction(&self) -> f64 {
        let n = self.cis.len();
        let mut sep = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&self.cis[i], &self.cis[j]);
                if a.hi < b.lo || b.hi < a.lo {
                    sep += 1;
                }
            }
        }
        let pairs = n * n.saturating_sub(1) / 2;
        if pairs == 0 {
            0.0
        } else {
            sep as f64 / pairs as f64
        }
    }

    pub fn means(&self) -> Vec<f64> {
        self.cis.iter().map(|c| c.mean).collect()
    }
}

/// Runs `spec` on `n_instances` freshly seeded instances and reports the
/// mean of the valid run-times of each with a `level` interval.
#[allow(clippy::too_many_arguments)]
pub fn mpirun_means(
    cfg: &InstanceConfig,
    spec: &SchemeSpec,
    func: &str,
    msize: u64,
    n_instances: usize,
    master_seed: u64,
    level: f64,
    exec: Execution,
) -> Result<MpirunMeans> {
    let seeds: Vec<u64> = (0..n_instances).map(|i| derive_run_seed(master_seed, i as u64, 0)).collect();
    let cis = map_indexed(n_instances, exec, |i| {
        let inst = cfg.instantiate(seeds[i])?;
        let run = run_scheme(&inst, spec, func, msize)?;
        let mut ci = mean_ci(&run.runtimes(), level)?;
        if ci.half_width.is_nan() {
            ci = MeanCi { half_width: 0.0, lo: ci.mean, hi: ci.mean, ..ci };
        }
        Ok(ci)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(MpirunMeans { seeds, cis })
}
