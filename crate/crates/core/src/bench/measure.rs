use super::window::{bcast_lead, initialize_window, Window};
use super::{Flags, ProcessSync, Scheme, SchemeSpec};
use crate::clocksync::{synchronize, GlobalClock, SyncConfig, SyncMethod};
use crate::dataproc::median;
use crate::sim::{comm, CollectiveRecord, LocalClock, Rank, SimInstance};
use crate::{Error, Result};

/// Broadcasts timed to choose the lead of the first window.
const LEAD_BCASTS: usize = 10;

/// One rank's raw timestamps for a run of a scheme.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankLog {
    pub local_start: Vec<f64>,
    pub local_end: Vec<f64>,
    /// Empty unless the rank has a global clock.
    pub global_start: Vec<f64>,
    pub global_end: Vec<f64>,
    pub flags: Vec<Flags>,
    /// Indices of the timed collective calls of each observation.
    pub calls: Vec<Vec<u64>>,
}

/// Per-rank benchmark driver living inside a rank program.
///
/// Keeps count of the synthetic collective calls this rank has issued so
/// observations can be matched with the simulator's ground truth.
pub struct Bencher {
    rk: Rank,
    root: usize,
    calls: u64,
    clock: Option<GlobalClock>,
}

impl Bencher {
    pub fn new(rk: Rank, root: usize) -> Self {
        Self { rk, root, calls: 0, clock: None }
    }

    pub fn rank(&self) -> &Rank {
        &self.rk
    }

    pub fn clock(&self) -> Option<GlobalClock> {
        self.clock
    }

    /// Synchronizes clocks with `method`, replacing any previous clock.
    pub async fn synchronize(&mut self, method: SyncMethod, cfg: &SyncConfig) -> Result<GlobalClock> {
        comm::barrier(&self.rk).await;
        let gc = synchronize(&self.rk, method, self.root, cfg).await?;
        self.clock = Some(gc);
        Ok(gc)
    }

    /// Executes one synthetic collective and returns its call index.
    pub async fn call(&mut self, func: &str, msize: u64, pipelined: bool) -> u64 {
        let idx = self.calls;
        self.calls += 1;
        self.rk.collective_with(func, msize, pipelined).await;
        idx
    }

    async fn barrier(&mut self, sync: ProcessSync) {
        match sync {
            ProcessSync::LibraryBarrier => {
                self.call("barrier", 0, false).await;
            }
            _ => comm::barrier(&self.rk).await,
        }
    }

    fn stamp(&self, log_global: &mut Vec<f64>, local: f64) {
        if let Some(gc) = self.clock {
            log_global.push(gc.global(local));
        }
    }

    /// Median over `n` barrier-synchronized calls of the longest local
    /// duration. Identical on every rank.
    pub async fn pilot(&mut self, func: &str, msize: u64, n: usize) -> f64 {
        let mut d = Vec::with_capacity(n);
        for _ in 0..n.max(1) {
            comm::barrier(&self.rk).await;
            let s = self.rk.read_clock();
            self.call(func, msize, false).await;
            d.push(self.rk.read_clock() - s);
        }
        let worst = comm::allreduce(&self.rk, d, f64::max).await;
        median(&worst)
    }

    /// Runs `spec` for `func(msize)`, synchronizing clocks first if the
    /// spec needs a global clock and none exists yet.
    pub async fn measure(&mut self, spec: &SchemeSpec, func: &str, msize: u64) -> Result<RankLog> {
        if let (Some(m), None) = (spec.clock_method(), self.clock) {
            self.synchronize(m, &spec.sync_config).await?;
        }
        let mut log = RankLog::default();
        let rk = self.rk.clone();
        match spec.scheme {
            Scheme::Ms1 => {
                for _ in 0..spec.nrep {
                    self.barrier(spec.sync).await;
                    let s = rk.read_clock();
                    let c = self.call(func, msize, false).await;
                    let e = rk.read_clock();
                    self.push(&mut log, s, e, Flags::NONE, vec![c]);
                }
            }
            Scheme::Ms2 => {
                if spec.optional_barrier {
                    self.barrier(spec.sync).await;
                }
                let s = rk.read_clock();
                let mut calls = Vec::with_capacity(spec.nrep);
                for i in 0..spec.nrep {
                    calls.push(self.call(func, msize, spec.pipelined && i > 0).await);
                }
                let e = rk.read_clock();
                self.push(&mut log, s, e, Flags::NONE, calls);
            }
            Scheme::Ms3 => {
                self.barrier(spec.sync).await;
                let s = rk.read_clock();
                let mut calls = Vec::with_capacity(spec.nrep);
                for _ in 0..spec.nrep {
                    calls.push(self.call(func, msize, false).await);
                    if spec.optional_barrier {
                        self.barrier(spec.sync).await;
                    }
                }
                let e = rk.read_clock();
                self.push(&mut log, s, e, Flags::NONE, calls);
            }
            Scheme::Ms4 => {
                let ProcessSync::Window { win_size, .. } = spec.sync else {
                    return Err(Error::Config("MS4 requires window synchronization".into()));
                };
                let gc = self.clock.expect("synchronized above");
                let lead = bcast_lead(&rk, self.root, LEAD_BCASTS).await;
                let start = initialize_window(&rk, self.root, &gc, lead).await;
                let mut w = Window::new(gc, start, win_size);
                for obs in 0..spec.nrep {
                    let mut f = w.start(&rk, obs).await;
                    let s = rk.read_clock();
                    let c = self.call(func, msize, false).await;
                    let e = rk.read_clock();
                    f |= w.stop(&rk);
                    self.push(&mut log, s, e, f, vec![c]);
                }
            }
        }
        Ok(log)
    }

    fn push(&self, log: &mut RankLog, s: f64, e: f64, f: Flags, calls: Vec<u64>) {
        log.local_start.push(s);
        log.local_end.push(e);
        self.stamp(&mut log.global_start, s);
        self.stamp(&mut log.global_end, e);
        log.flags.push(f);
        log.calls.push(calls);
    }
}

/// One observation assembled over all ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub obs: usize,
    pub local_start: Vec<f64>,
    pub local_end: Vec<f64>,
    pub global_start: Option<Vec<f64>>,
    pub global_end: Option<Vec<f64>>,
    pub flags: Flags,
    /// Mean true duration of the timed calls.
    pub ground_truth: f64,
    /// Number of collective calls covered by the timestamps.
    pub n_calls: usize,
    /// The scheme's completion time.
    pub runtime: f64,
    /// Indices of the timed calls in the simulator's collective log.
    pub calls: Vec<u64>,
}

fn fmax(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn fmin(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

impl Measurement {
    /// Longest per-rank local duration, per call.
    pub fn local_completion(&self) -> f64 {
        fmax(self.local_start.iter().zip(&self.local_end).map(|(s, e)| e - s)) / self.n_calls as f64
    }

    /// Latest global end minus earliest global start, per call.
    pub fn global_completion(&self) -> Option<f64> {
        let (s, e) = (self.global_start.as_ref()?, self.global_end.as_ref()?);
        Some((fmax(e.iter().copied()) - fmin(s.iter().copied())) / self.n_calls as f64)
    }

    pub fn is_valid(&self) -> bool {
        self.flags.is_valid()
    }
}

/// Everything one run of a scheme produced.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub spec: SchemeSpec,
    pub func: String,
    pub msize: u64,
    pub measurements: Vec<Measurement>,
    pub globals: Vec<GlobalClock>,
    pub clocks: Vec<LocalClock>,
    pub records: Vec<CollectiveRecord>,
}

impl SchemeRun {
    /// Completion times of the valid observations.
    pub fn runtimes(&self) -> Vec<f64> {
        self.measurements.iter().filter(|m| m.is_valid()).map(|m| m.runtime).collect()
    }

    /// As [`SchemeRun::runtimes`], failing when nothing is valid.
    pub fn sample(&self) -> Result<Vec<f64>> {
        let v = self.runtimes();
        if v.is_empty() {
            return Err(Error::EmptySample(format!("no valid measurement of {}({})", self.func, self.msize)));
        }
        Ok(v)
    }

    pub fn invalid_fraction(&self) -> f64 {
        if self.measurements.is_empty() {
            return 0.0;
        }
        let bad = self.measurements.iter().filter(|m| !m.is_valid()).count();
        bad as f64 / self.measurements.len() as f64
    }

    /// Largest disagreement between any rank's global clock and root's at
    /// true time `t`, from noiseless readings.
    pub fn max_clock_error(&self, t: f64) -> f64 {
        let root = self.spec.root;
        let g = |r: usize| self.globals[r].global(self.clocks[r].ideal(t));
        let g0 = g(root);
        (0..self.clocks.len()).map(|r| (g(r) - g0).abs()).fold(0.0, f64::max)
    }

    /// The simulator's record of a collective call.
    pub fn record(&self, call: u64) -> Option<&CollectiveRecord> {
        self.records.get(call as usize).filter(|r| r.call == call)
    }
}

/// Combines per-rank logs into observations. `records` must be ordered by
/// call index.
pub(crate) fn assemble(spec: &SchemeSpec, logs: &[RankLog], records: &[CollectiveRecord]) -> Result<Vec<Measurement>> {
    let Some(first) = logs.first() else {
        return Ok(Vec::new());
    };
    let nobs = first.local_start.len();
    if logs.iter().any(|l| l.local_start.len() != nobs || l.calls != first.calls) {
        return Err(Error::Shape { expected: "identical observation sequences on all ranks" });
    }
    let has_global = logs.iter().all(|l| l.global_start.len() == nobs);
    let mut out = Vec::with_capacity(nobs);
    for obs in 0..nobs {
        let calls = first.calls[obs].clone();
        let mut gt = 0.0;
        for &c in &calls {
            let rec = records
                .get(c as usize)
                .filter(|r| r.call == c)
                .ok_or_else(|| Error::InvalidArgument(format!("no record of collective call {c}")))?;
            gt += rec.ground_truth;
        }
        let n_calls = match spec.scheme {
            Scheme::Ms2 | Scheme::Ms3 => calls.len().max(1),
            _ => 1,
        };
        let col = |f: &dyn Fn(&RankLog) -> f64| logs.iter().map(f).collect::<Vec<f64>>();
        let mut m = Measurement {
            obs,
            local_start: col(&|l| l.local_start[obs]),
            local_end: col(&|l| l.local_end[obs]),
            global_start: has_global.then(|| col(&|l| l.global_start[obs])),
            global_end: has_global.then(|| col(&|l| l.global_end[obs])),
            flags: logs.iter().fold(Flags::NONE, |a, l| a | l.flags[obs]),
            ground_truth: gt / calls.len().max(1) as f64,
            n_calls,
            runtime: 0.0,
            calls,
        };
        m.runtime = match spec.scheme {
            Scheme::Ms4 => m.global_completion().expect("window runs carry global timestamps"),
            _ => m.local_completion(),
        };
        out.push(m);
    }
    Ok(out)
}

pub(crate) fn check_collectives(inst: &SimInstance, spec: &SchemeSpec, func: &str) -> Result<()> {
    if !inst.collectives.contains_key(func) {
        return Err(Error::UnknownCollective(func.to_string()));
    }
    if spec.sync == ProcessSync::LibraryBarrier && !inst.collectives.contains_key("barrier") {
        return Err(Error::UnknownCollective("barrier".into()));
    }
    if spec.root >= inst.p {
        return Err(Error::Config(format!("root {} outside 0..{}", spec.root, inst.p)));
    }
    Ok(())
}

/// Runs one scheme for `func(msize)` on a fresh simulation of `inst`.
pub fn run_scheme(inst: &SimInstance, spec: &SchemeSpec, func: &str, msize: u64) -> Result<SchemeRun> {
    spec.validate()?;
    check_collectives(inst, spec, func)?;
    let shared = spec.clone();
    let name = func.to_string();
    let out = inst.run(move |rk| {
        let spec = shared.clone();
        let func = name.clone();
        async move {
            let mut b = Bencher::new(rk, spec.root);
            let log = b.measure(&spec, &func, msize).await?;
            Ok::<_, Error>((b.clock().unwrap_or_default(), log))
        }
    })?;
    let mut globals = Vec::with_capacity(inst.p);
    let mut logs = Vec::with_capacity(inst.p);
    for r in out.results {
        let (g, l) = r?;
        globals.push(g);
        logs.push(l);
    }
    let measurements = assemble(spec, &logs, &out.collectives)?;
    Ok(SchemeRun {
        spec: spec.clone(),
        func: func.to_string(),
        msize,
        measurements,
        globals,
        clocks: out.clocks,
        records: out.collectives,
    })
}

/// Times `nrep` individual calls: barrier synchronization with local-time
/// completion, or window synchronization with global-time completion.
///
/// A window run without a single valid observation is an error.
pub fn time_mpi_function(
    inst: &SimInstance,
    func: &str,
    msize: u64,
    nrep: usize,
    sync: ProcessSync,
    sync_config: &SyncConfig,
) -> Result<Vec<Measurement>> {
    let scheme = if sync.is_window() { Scheme::Ms4 } else { Scheme::Ms1 };
    let spec = SchemeSpec { sync_config: *sync_config, ..SchemeSpec::new(scheme, sync, nrep) };
    let run = run_scheme(inst, &spec, func, msize)?;
    if sync.is_window() {
        run.sample()?;
    }
    Ok(run.measurements)
}
