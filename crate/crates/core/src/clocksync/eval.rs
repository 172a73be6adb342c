use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{compute_rtt, synchronize, tags, GlobalClock, SyncConfig, SyncMethod};
use crate::dataproc::median;
use crate::sim::{comm, LocalClock, Rank, SimInstance};
use crate::Result;

/// Schedule of the post-synchronization offset measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffsetProbe {
    pub nsteps: usize,
    /// Pause between steps, in seconds of simulated time.
    pub sleep_time: f64,
    pub nrounds: usize,
}

impl Default for OffsetProbe {
    fn default() -> Self {
        Self { nsteps: 20, sleep_time: 1.0, nrounds: 10 }
    }
}

/// Offsets to root measured in one step; `offsets[root]` is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetEpoch {
    /// Root's global time at the start of the step, relative to the first
    /// step.
    pub elapsed: f64,
    pub offsets: Vec<f64>,
}

/// Measures how far each rank's global clock is from root's, repeatedly.
/// Returns the epochs on root and an empty list elsewhere.
pub async fn measure_global_offsets(
    rk: &Rank,
    clock: &GlobalClock,
    root: usize,
    probe: &OffsetProbe,
    cfg: &SyncConfig,
) -> Result<Vec<OffsetEpoch>> {
    let p = rk.size();
    let me = rk.id();
    let mut rtts = vec![0.0; p];
    for r in (0..p).filter(|&r| r != root) {
        let v = compute_rtt(rk, r, root, cfg).await?;
        if me == root {
            rtts[r] = v;
        }
    }
    let mut epochs = Vec::new();
    if me == root {
        let mut first = None;
        for _ in 0..probe.nsteps {
            let start = clock.global(rk.read_clock());
            let t0 = *first.get_or_insert(start);
            let mut offsets = vec![0.0; p];
            for r in (0..p).filter(|&r| r != root) {
                let mut best = f64::INFINITY;
                for _ in 0..probe.nrounds {
                    rk.send(r, tags::OFFSETS, vec![0.0]);
                    let tremote = rk.recv(r, tags::OFFSETS).await[0];
                    let tlocal = clock.global(rk.read_clock()) - rtts[r] / 2.0;
                    let off = tremote - tlocal;
                    if off.abs() < best.abs() {
                        best = off;
                    }
                }
                offsets[r] = best;
            }
            epochs.push(OffsetEpoch { elapsed: start - t0, offsets });
            rk.compute(probe.sleep_time).await;
        }
    } else {
        for _ in 0..probe.nsteps * probe.nrounds {
            rk.recv(root, tags::OFFSETS).await;
            let t = clock.global(rk.read_clock());
            rk.send(root, tags::OFFSETS, vec![t]);
        }
    }
    Ok(epochs)
}

/// Outcome of one synchronization run with ground truth attached.
#[derive(Debug, Clone)]
pub struct SyncEvaluation {
    pub method: SyncMethod,
    pub p: usize,
    pub seed: u64,
    pub root: usize,
    /// Longest local duration of the synchronization over all ranks.
    pub sync_duration: f64,
    /// True time at which the last rank finished synchronizing.
    pub sync_end: f64,
    pub clocks: Vec<LocalClock>,
    pub globals: Vec<GlobalClock>,
    pub epochs: Vec<OffsetEpoch>,
}

impl SyncEvaluation {
    /// Global-time disagreement of `rank` with root at true time `t`,
    /// computed from noiseless clock readings.
    pub fn clock_error(&self, rank: usize, t: f64) -> f64 {
        let g = |r: usize| self.globals[r].global(self.clocks[r].ideal(t));
        g(rank) - g(self.root)
    }

    pub fn clock_errors(&self, t: f64) -> Vec<f64> {
        (0..self.p).map(|r| self.clock_error(r, t)).collect()
    }

    fn abs_errors(&self, t: f64) -> Vec<f64> {
        (0..self.p).filter(|&r| r != self.root).map(|r| self.clock_error(r, t).abs()).collect()
    }

    /// Median absolute error over non-root ranks, `dt` seconds after the
    /// synchronization finished.
    pub fn median_abs_error_after(&self, dt: f64) -> f64 {
        let e = self.abs_errors(self.sync_end + dt);
        if e.is_empty() {
            0.0
        } else {
            median(&e)
        }
    }

    pub fn max_abs_error_after(&self, dt: f64) -> f64 {
        self.abs_errors(self.sync_end + dt).into_iter().fold(0.0, f64::max)
    }
}

/// Synchronizes every rank of `inst` with `method`, then optionally runs
/// the offset probe.
pub fn evaluate_sync(
    inst: &SimInstance,
    method: SyncMethod,
    root: usize,
    cfg: &SyncConfig,
    probe: Option<OffsetProbe>,
) -> Result<SyncEvaluation> {
    cfg.validate()?;
    let cfg = *cfg;
    let out = inst.run(move |rk| async move {
        comm::barrier(&rk).await;
        let s = rk.read_clock();
        let gc = synchronize(&rk, method, root, &cfg).await?;
        let duration = rk.read_clock() - s;
        let end = rk.true_now();
        let epochs = match probe {
            Some(pr) => measure_global_offsets(&rk, &gc, root, &pr, &cfg).await?,
            None => Vec::new(),
        };
        Ok::<_, crate::Error>((gc, duration, end, epochs))
    })?;
    let mut globals = Vec::with_capacity(inst.p);
    let mut sync_duration: f64 = 0.0;
    let mut sync_end: f64 = 0.0;
    let mut epochs = Vec::new();
    for (r, res) in out.results.into_iter().enumerate() {
        let (gc, d, e, ep) = res?;
        globals.push(gc);
        sync_duration = sync_duration.max(d);
        sync_end = sync_end.max(e);
        if r == root {
            epochs = ep;
        }
    }
    Ok(SyncEvaluation {
        method,
        p: inst.p,
        seed: inst.seed,
        root,
        sync_duration,
        sync_end,
        clocks: inst.clocks.clone(),
        globals,
        epochs,
    })
}

#[derive(Serialize)]
struct Row<'a> {
    method: &'a str,
    p: usize,
    seed: u64,
    epoch_s: f64,
    rank: usize,
    offset_s: f64,
    sync_duration_s: f64,
}

/// One row per (evaluation, epoch, non-root rank).
pub fn write_sync_eval_csv<W: Write>(evals: &[SyncEvaluation], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut wrote = false;
    for ev in evals {
        let name = ev.method.to_string();
        for ep in &ev.epochs {
            for (rank, &off) in ep.offsets.iter().enumerate() {
                if rank == ev.root {
                    continue;
                }
                wr.serialize(Row {
                    method: &name,
                    p: ev.p,
                    seed: ev.seed,
                    epoch_s: ep.elapsed,
                    rank,
                    offset_s: off,
                    sync_duration_s: ev.sync_duration,
                })?;
                wrote = true;
            }
        }
    }
    if !wrote {
        wr.write_record(["method", "p", "seed", "epoch_s", "rank", "offset_s", "sync_duration_s"])?;
    }
    wr.flush()?;
    Ok(())
}
