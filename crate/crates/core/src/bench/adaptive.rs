use serde::{Deserialize, Serialize};

use super::window::{bcast_lead, initialize_window, Window};
use crate::clocksync::{synchronize, GlobalClock, SyncConfig, SyncMethod};
use crate::dataproc::{mean, std_dev};
use crate::sim::{comm, Rank, SimInstance};
use crate::{Error, Result};

/// Parameters of the SKaMPI measurement loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkampiBenchParams {
    pub max_rep: usize,
    pub min_rep: usize,
    /// Standard error, in seconds, below which measuring stops.
    pub max_std_err: f64,
    pub method: SyncMethod,
    /// Safety cap on measurement rounds per message size.
    pub max_rounds: usize,
}

impl Default for SkampiBenchParams {
    fn default() -> Self {
        Self { max_rep: 100, min_rep: 8, max_std_err: 1e-7, method: SyncMethod::Skampi, max_rounds: 64 }
    }
}

/// Parameters of the NBCBench measurement loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbcBenchParams {
    pub nrep: usize,
    pub warmup_rounds: usize,
    /// Simulated seconds a message size may take before `nrep` is halved.
    pub time_budget: f64,
    pub method: SyncMethod,
    /// Safety cap on window-growth retries per message size.
    pub max_retries: usize,
}

impl Default for NbcBenchParams {
    fn default() -> Self {
        Self { nrep: 100, warmup_rounds: 10, time_budget: 10.0, method: SyncMethod::Netgauge, max_retries: 64 }
    }
}

/// Outcome of an adaptive loop for one message size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveResult {
    pub func: String,
    pub msize: u64,
    /// Per-observation maximum over ranks of the local run-times.
    pub times: Vec<f64>,
    pub win_size: f64,
    /// Repetitions per round when the loop stopped.
    pub nrep: usize,
    pub rounds: usize,
    pub std_error: f64,
    /// Observations discarded because of window errors.
    pub n_invalid: usize,
}

fn std_error(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::INFINITY;
    }
    std_dev(v) / (v.len() as f64).sqrt()
}

/// Length minus one of the longest run of invalid observations, or 0.
fn max_consec_errors(errors: &[f64]) -> usize {
    let (mut best, mut run) = (0usize, 0usize);
    for &e in errors {
        run = if e > 0.0 { run + 1 } else { 0 };
        best = best.max(run);
    }
    best.saturating_sub(1)
}

fn per_obs_max(gathered: &[Vec<f64>]) -> Vec<f64> {
    let n = gathered.first().map_or(0, Vec::len);
    (0..n).map(|i| gathered.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max)).collect()
}

fn check(inst: &SimInstance, func: &str, root: usize) -> Result<()> {
    if !inst.collectives.contains_key(func) {
        return Err(Error::UnknownCollective(func.to_string()));
    }
    if root >= inst.p {
        return Err(Error::Config(format!("root {root} outside 0..{}", inst.p)));
    }
    Ok(())
}

async fn measure(rk: &Rank, func: &str, msize: u64) -> f64 {
    let s = rk.read_clock();
    rk.collective(func, msize).await;
    rk.read_clock() - s
}

#[allow(clippy::too_many_arguments)]
async fn skampi_rank(
    rk: Rank,
    func: String,
    msizes: Vec<u64>,
    prm: SkampiBenchParams,
    cfg: SyncConfig,
    root: usize,
) -> Result<Vec<AdaptiveResult>> {
    let me = rk.id();
    comm::barrier(&rk).await;
    let gc: GlobalClock = synchronize(&rk, prm.method, root, &cfg).await?;
    let mut start = initialize_window(&rk, root, &gc, 0.0).await;
    let mut results = Vec::new();
    for &msize in &msizes {
        let mut win = 0.0;
        let mut nrep = prm.min_rep.max(4);
        let mut t_final = Vec::new();
        let (mut rounds, mut n_invalid, mut se) = (0, 0, f64::INFINITY);
        loop {
            rounds += 1;
            let mut w = Window::new(gc, start, win);
            let loop_start = gc.global(rk.read_clock());
            let mut t = Vec::with_capacity(nrep);
            let mut err = Vec::with_capacity(nrep);
            for i in 0..nrep {
                let mut f = w.start(&rk, i).await;
                t.push(measure(&rk, &func, msize).await);
                f |= w.stop(&rk);
                err.push(f64::from(f.0));
            }
            let total_time = gc.global(rk.read_clock()) - loop_start;
            let gathered = comm::gather(&rk, root, t).await;
            let errors = comm::allreduce(&rk, err, f64::max).await;
            let mut ctrl = Vec::new();
            if me == root {
                let worst = per_obs_max(&gathered.expect("root gathers"));
                let n_err = errors.iter().filter(|&&e| e > 0.0).count();
                n_invalid += n_err;
                t_final.extend(worst.iter().zip(&errors).filter(|(_, &e)| e == 0.0).map(|(&v, _)| v));
                if n_err as f64 >= nrep as f64 / 4.0 {
                    win = f64::max(2.0 * win, total_time / (nrep + 1) as f64 * 1.5);
                }
                if max_consec_errors(&errors) > nrep / 2 {
                    nrep = (nrep / 2).max(4);
                }
                se = std_error(&t_final);
                let stop = t_final.len() >= prm.max_rep
                    || (t_final.len() >= prm.min_rep && se <= prm.max_std_err)
                    || rounds >= prm.max_rounds;
                ctrl = vec![win, nrep as f64, if stop { 1.0 } else { 0.0 }];
            }
            let ctrl = comm::bcast(&rk, root, ctrl).await;
            win = ctrl[0];
            nrep = ctrl[1] as usize;
            start = initialize_window(&rk, root, &gc, 0.0).await;
            if ctrl[2] != 0.0 {
                break;
            }
        }
        if me == root {
            results.push(AdaptiveResult {
                func: func.clone(),
                msize,
                times: t_final,
                win_size: win,
                nrep,
                rounds,
                std_error: se,
                n_invalid,
            });
        }
    }
    Ok(results)
}

/// SKaMPI's error-driven loop: the window grows while a quarter or more of
/// a round's observations are invalid, `nrep` halves after long error
/// streaks, and measuring stops at `max_rep` valid observations or once
/// `min_rep` of them have a standard error below `max_std_err`.
///
/// The window starts at size zero, so the first round only calibrates it.
/// Returns one result per message size (seen from root).
pub fn skampi_adaptive_bench(
    inst: &SimInstance,
    func: &str,
    msizes: &[u64],
    params: &SkampiBenchParams,
    cfg: &SyncConfig,
    root: usize,
) -> Result<Vec<AdaptiveResult>> {
    check(inst, func, root)?;
    if params.min_rep < 4 || params.max_rep < params.min_rep {
        return Err(Error::Config("need 4 <= min_rep <= max_rep".into()));
    }
    cfg.validate()?;
    let (func, msizes, prm, cfg) = (func.to_string(), msizes.to_vec(), *params, *cfg);
    let out = inst.run(move |rk| skampi_rank(rk, func.clone(), msizes.clone(), prm, cfg, root))?;
    out.results.into_iter().nth(root).expect("root exists")
}

async fn nbc_rank(
    rk: Rank,
    func: String,
    msizes: Vec<u64>,
    prm: NbcBenchParams,
    cfg: SyncConfig,
    root: usize,
) -> Result<Vec<AdaptiveResult>> {
    let me = rk.id();
    comm::barrier(&rk).await;
    let gc = synchronize(&rk, prm.method, root, &cfg).await?;
    let mut nrep = prm.nrep;
    let mut results = Vec::new();
    for &msize in &msizes {
        for _ in 0..prm.warmup_rounds {
            measure(&rk, &func, msize).await;
        }
        let mut pilot = f64::INFINITY;
        for _ in 0..(nrep / 10).max(1) {
            pilot = pilot.min(measure(&rk, &func, msize).await);
        }
        let estimated = comm::allreduce_max(&rk, pilot).await;
        if estimated * 5.0 * nrep as f64 > prm.time_budget {
            nrep = (nrep / 2).max(4);
        }
        let mut win = if estimated > 0.0 { 2.0 * estimated } else { 1e-6 };
        let mut rounds = 0;
        let mut n_invalid = 0;
        let valid = loop {
            rounds += 1;
            let lead = bcast_lead(&rk, root, 10).await;
            let mut next = initialize_window(&rk, root, &gc, lead).await;
            let mut t = Vec::with_capacity(nrep);
            let mut err = Vec::with_capacity(nrep);
            for _ in 0..nrep {
                let w = rk.wait_until_local(gc.local_for(next)).await;
                err.push(if w.late { (gc.global(w.first_reading) - next).max(f64::MIN_POSITIVE) } else { 0.0 });
                next += win;
                t.push(measure(&rk, &func, msize).await);
            }
            let errors = comm::allreduce(&rk, err, f64::max).await;
            let kept: Vec<f64> = t.iter().zip(&errors).filter(|(_, &e)| e == 0.0).map(|(&v, _)| v).collect();
            let n_err = nrep - kept.len();
            n_invalid += n_err;
            if (n_err as f64 > 0.25 * nrep as f64 || kept.len() < 4) && rounds <= prm.max_retries {
                win *= 1.5;
                continue;
            }
            break kept;
        };
        let gathered = comm::gather(&rk, root, valid).await;
        if me == root {
            let times = per_obs_max(&gathered.expect("root gathers"));
            results.push(AdaptiveResult {
                func: func.clone(),
                msize,
                std_error: std_error(&times),
                times,
                win_size: win,
                nrep,
                rounds,
                n_invalid,
            });
        }
    }
    Ok(results)
}

/// NBCBench's loop: warm-up, a pilot estimate of the run-time from the
/// minimum of `nrep / 10` calls, halving of `nrep` when the message size
/// would exceed the time budget, and a window that grows by 1.5 until at
/// most a quarter of the observations are late and at least four are valid.
///
/// The halved `nrep` carries over to later message sizes. The initial
/// window is twice the pilot estimate.
pub fn nbcbench_adaptive_bench(
    inst: &SimInstance,
    func: &str,
    msizes: &[u64],
    params: &NbcBenchParams,
    cfg: &SyncConfig,
    root: usize,
) -> Result<Vec<AdaptiveResult>> {
    check(inst, func, root)?;
    if params.nrep < 4 {
        return Err(Error::Config("nrep must be at least 4".into()));
    }
    cfg.validate()?;
    let (func, msizes, prm, cfg) = (func.to_string(), msizes.to_vec(), *params, *cfg);
    let out = inst.run(move |rk| nbc_rank(rk, func.clone(), msizes.clone(), prm, cfg, root))?;
    out.results.into_iter().nth(root).expect("root exists")
}

/// Mean of an adaptive result's observations.
impl AdaptiveResult {
    pub fn mean(&self) -> Option<f64> {
        (!self.times.is_empty()).then(|| mean(&self.times))
    }
}
