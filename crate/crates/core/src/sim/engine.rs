use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

use rand_chacha::ChaCha8Rng;

use super::clock::LocalClock;
use super::collective::CollectiveModel;
use super::network::NetworkModel;
use super::trace::{TraceEvent, TraceKind};
use crate::seed::{self, streams};
use crate::{Error, Result};

/// Upper bound on simulated clock polls in a single busy-wait.
const MAX_POLLS: u64 = 1_000_000;

/// One simulated `mpirun`: process count, clocks, network and collectives.
#[derive(Debug, Clone)]
pub struct SimInstance {
    pub p: usize,
    pub seed: u64,
    pub clocks: Vec<LocalClock>,
    pub network: NetworkModel,
    pub collectives: BTreeMap<String, CollectiveModel>,
    /// True time at which each rank's program starts.
    pub start_times: Vec<f64>,
    pub trace: bool,
}

/// A per-rank program for [`run_programs`].
pub type Program<T> = Box<dyn FnOnce(Rank) -> Pin<Box<dyn Future<Output = T>>>>;

/// Record of one collective execution.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveRecord {
    pub call: u64,
    pub name: String,
    pub msize: u64,
    pub entries: Vec<f64>,
    pub exits: Vec<f64>,
    pub ground_truth: f64,
    pub resamples: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    pub events: u64,
    pub messages: u64,
    pub clock_reads: u64,
    pub polls: u64,
}

/// Everything a simulation run produced.
#[derive(Debug, Clone)]
pub struct SimOutput<T> {
    pub results: Vec<T>,
    pub trace: Vec<TraceEvent>,
    pub collectives: Vec<CollectiveRecord>,
    /// Clock parameters as they were at time zero.
    pub clocks: Vec<LocalClock>,
    pub end_time: f64,
    pub stats: SimStats,
}

/// Result of a busy-wait on the local clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitOutcome {
    /// Reading taken on entry.
    pub first_reading: f64,
    /// Reading that ended the wait (equal to `first_reading` when late).
    pub reading: f64,
    /// True if the target had already passed on entry.
    pub late: bool,
    pub polls: u64,
}

#[derive(Debug, Clone)]
struct Message {
    src: usize,
    tag: u32,
    payload: Vec<f64>,
}

#[derive(Debug)]
enum EventKind {
    Wake(usize),
    Deliver(usize, Message),
}

#[derive(Debug)]
struct Scheduled {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RankState {
    Runnable,
    Recv { src: usize, tag: u32 },
    Sleeping,
    InCollective,
    Done,
}

#[derive(Debug)]
struct Gathering {
    name: String,
    msize: u64,
    pipelined: bool,
    entries: Vec<Option<f64>>,
    entered: usize,
    exits: Option<Vec<f64>>,
    left: usize,
}

struct World {
    p: usize,
    now: f64,
    seq: u64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    clocks: Vec<LocalClock>,
    network: NetworkModel,
    collectives: BTreeMap<String, CollectiveModel>,
    rng: ChaCha8Rng,
    mailboxes: Vec<VecDeque<Message>>,
    states: Vec<RankState>,
    last_arrival: Vec<f64>,
    gatherings: BTreeMap<u64, Gathering>,
    coll_calls: Vec<u64>,
    coll_log: Vec<CollectiveRecord>,
    trace: Option<Vec<TraceEvent>>,
    error: Option<Error>,
    stats: SimStats,
}

impl World {
    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled { time, seq: self.seq, kind }));
    }

    fn fail(&mut self, e: Error) {
        if self.error.is_none() {
            self.error = Some(e);
        }
    }

    fn record(&mut self, rank: usize, kind: TraceKind, local: Option<f64>) {
        if let Some(tr) = self.trace.as_mut() {
            let local_time = local.unwrap_or_else(|| self.clocks[rank].ideal(self.now));
            tr.push(TraceEvent { rank, event_kind: kind, true_time: self.now, local_time });
        }
    }

    fn read_clock(&mut self, rank: usize) -> f64 {
        self.stats.clock_reads += 1;
        let now = self.now;
        match self.clocks[rank].read(now, &mut self.rng) {
            Ok(v) => {
                self.record(rank, TraceKind::ClockRead, Some(v));
                v
            }
            Err(e) => {
                self.fail(e);
                self.clocks[rank].last_reading().unwrap_or(0.0)
            }
        }
    }

    fn send(&mut self, src: usize, dst: usize, tag: u32, payload: Vec<f64>) {
        if dst >= self.p {
            self.fail(Error::InvalidArgument(format!("rank {src} sent to nonexistent rank {dst}")));
            return;
        }
        let latency = match self.network.sample_latency(src, dst, &mut self.rng) {
            Ok(l) => l,
            Err(e) => return self.fail(e),
        };
        let slot = src * self.p + dst;
        let arrival = (self.now + latency).max(self.last_arrival[slot]);
        self.last_arrival[slot] = arrival;
        self.stats.messages += 1;
        self.record(src, TraceKind::Send, None);
        self.schedule(arrival, EventKind::Deliver(dst, Message { src, tag, payload }));
    }

    /// Simulates polling the clock until it reaches `target`. Returns the
    /// true time of the successful poll, its reading and the poll count.
    fn busy_wait(&mut self, rank: usize, target: f64) -> (f64, f64, u64) {
        let clock = &self.clocks[rank];
        let rate = 1.0 + clock.skew;
        let step = clock.granularity.max(clock.read_noise_sigma / 8.0) / rate;
        let lead = (4.0 * clock.read_noise_sigma + clock.granularity) / rate;
        let t_exact = clock.true_time_of(target);
        let mut t = self.now.max(t_exact - lead);
        let mut polls = 0;
        loop {
            polls += 1;
            let reading = match self.clocks[rank].read(t, &mut self.rng) {
                Ok(v) => v,
                Err(e) => {
                    self.fail(e);
                    return (t, target, polls);
                }
            };
            if reading >= target {
                self.stats.polls += polls;
                return (t, reading, polls);
            }
            if polls >= MAX_POLLS {
                t = t.max(t_exact + lead);
            } else {
                t += step;
            }
        }
    }

    fn enter_collective(&mut self, rank: usize, name: &str, msize: u64, pipelined: bool) -> u64 {
        let call = self.coll_calls[rank];
        self.coll_calls[rank] += 1;
        let p = self.p;
        let now = self.now;
        let g = self.gatherings.entry(call).or_insert_with(|| Gathering {
            name: name.to_string(),
            msize,
            pipelined,
            entries: vec![None; p],
            entered: 0,
            exits: None,
            left: 0,
        });
        if g.name != name || g.msize != msize {
            let expected = format!("{}({})", g.name, g.msize);
            self.fail(Error::CollectiveMismatch {
                call,
                rank,
                expected,
                found: format!("{name}({msize})"),
            });
            return call;
        }
        g.entries[rank] = Some(now);
        g.entered += 1;
        self.states[rank] = RankState::InCollective;
        self.record(rank, TraceKind::CollectiveEnter, None);
        if self.gatherings[&call].entered == p {
            self.complete_collective(call);
        }
        call
    }

    fn complete_collective(&mut self, call: u64) {
        let g = self.gatherings.get_mut(&call).expect("gathering exists");
        let entries: Vec<f64> = g.entries.iter().map(|e| e.expect("all entered")).collect();
        let Some(model) = self.collectives.get(&g.name) else {
            let name = g.name.clone();
            return self.fail(Error::UnknownCollective(name));
        };
        let outcome = match model.execute(&entries, g.msize, g.pipelined, &mut self.rng) {
            Ok(o) => o,
            Err(e) => return self.fail(e),
        };
        g.exits = Some(outcome.exits.clone());
        self.coll_log.push(CollectiveRecord {
            call,
            name: g.name.clone(),
            msize: g.msize,
            entries,
            exits: outcome.exits.clone(),
            ground_truth: outcome.ground_truth,
            resamples: outcome.resamples,
        });
        for (r, &exit) in outcome.exits.iter().enumerate() {
            self.schedule(exit, EventKind::Wake(r));
        }
    }

    /// Exit time of `rank` from collective `call`, once the collective has
    /// completed and the clock has reached it.
    fn leave_collective(&mut self, rank: usize, call: u64) -> Option<f64> {
        let g = self.gatherings.get_mut(&call)?;
        let exit = g.exits.as_ref()?[rank];
        if self.now < exit {
            return None;
        }
        g.left += 1;
        if g.left == self.p {
            self.gatherings.remove(&call);
        }
        self.states[rank] = RankState::Runnable;
        self.record(rank, TraceKind::CollectiveExit, None);
        Some(exit)
    }
}

/// Handle through which a rank's program interacts with the simulation.
#[derive(Clone)]
pub struct Rank {
    world: Rc<RefCell<World>>,
    id: usize,
    p: usize,
}

impl Rank {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn size(&self) -> usize {
        self.p
    }

    /// Reads this rank's local clock.
    pub fn read_clock(&self) -> f64 {
        self.world.borrow_mut().read_clock(self.id)
    }

    /// Current true time. For instrumentation only; the algorithms under
    /// study never call it.
    pub fn true_now(&self) -> f64 {
        self.world.borrow().now
    }

    /// Eager, non-overtaking send.
    pub fn send(&self, dst: usize, tag: u32, payload: Vec<f64>) {
        self.world.borrow_mut().send(self.id, dst, tag, payload);
    }

    /// Blocking receive of the next message from `src` with `tag`.
    pub fn recv(&self, src: usize, tag: u32) -> RecvFuture {
        RecvFuture { world: self.world.clone(), me: self.id, src, tag }
    }

    pub fn sleep_until(&self, t: f64) -> SleepFuture {
        SleepFuture { world: self.world.clone(), me: self.id, until: t, armed: false }
    }

    /// Advances this rank by `d` seconds of true time.
    pub fn compute(&self, d: f64) -> SleepFuture {
        let now = self.true_now();
        self.sleep_until(now + d.max(0.0))
    }

    /// Busy-waits until the local clock reads at least `target`.
    pub async fn wait_until_local(&self, target: f64) -> WaitOutcome {
        let first = self.read_clock();
        if first >= target {
            return WaitOutcome { first_reading: first, reading: first, late: first > target, polls: 1 };
        }
        let (t, reading, polls) = self.world.borrow_mut().busy_wait(self.id, target);
        self.sleep_until(t).await;
        let mut w = self.world.borrow_mut();
        w.record(self.id, TraceKind::WaitDone, Some(reading));
        WaitOutcome { first_reading: first, reading, late: false, polls: polls + 1 }
    }

    /// Enters the named synthetic collective; resolves at this rank's exit.
    pub fn collective(&self, name: &str, msize: u64) -> CollectiveFuture {
        self.collective_with(name, msize, false)
    }

    /// As [`Rank::collective`], flagging a call issued back-to-back with the
    /// previous one.
    pub fn collective_with(&self, name: &str, msize: u64, pipelined: bool) -> CollectiveFuture {
        CollectiveFuture {
            world: self.world.clone(),
            me: self.id,
            name: name.to_string(),
            msize,
            pipelined,
            call: None,
        }
    }
}

pub struct RecvFuture {
    world: Rc<RefCell<World>>,
    me: usize,
    src: usize,
    tag: u32,
}

impl Future for RecvFuture {
    type Output = Vec<f64>;
    fn poll(self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<Vec<f64>> {
        let mut w = self.world.borrow_mut();
        let (me, src, tag) = (self.me, self.src, self.tag);
        if let Some(pos) = w.mailboxes[me].iter().position(|m| m.src == src && m.tag == tag) {
            let msg = w.mailboxes[me].remove(pos).expect("position is valid");
            w.states[me] = RankState::Runnable;
            w.record(me, TraceKind::Recv, None);
            Poll::Ready(msg.payload)
        } else {
            w.states[me] = RankState::Recv { src, tag };
            Poll::Pending
        }
    }
}

pub struct SleepFuture {
    world: Rc<RefCell<World>>,
    me: usize,
    until: f64,
    armed: bool,
}

impl Future for SleepFuture {
    type Output = ();
    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<()> {
        let until = self.until;
        let mut w = self.world.borrow_mut();
        if w.now >= until {
            w.states[self.me] = RankState::Runnable;
            return Poll::Ready(());
        }
        if !self.armed {
            w.schedule(until, EventKind::Wake(self.me));
            w.states[self.me] = RankState::Sleeping;
            drop(w);
            self.armed = true;
        }
        Poll::Pending
    }
}

pub struct CollectiveFuture {
    world: Rc<RefCell<World>>,
    me: usize,
    name: String,
    msize: u64,
    pipelined: bool,
    call: Option<u64>,
}

impl Future for CollectiveFuture {
    /// True exit time (instrumentation only).
    type Output = f64;
    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<f64> {
        let mut w = self.world.borrow_mut();
        match self.call {
            None => {
                let call = w.enter_collective(self.me, &self.name, self.msize, self.pipelined);
                drop(w);
                self.call = Some(call);
                Poll::Pending
            }
            Some(call) => match w.leave_collective(self.me, call) {
                Some(exit) => Poll::Ready(exit),
                None => Poll::Pending,
            },
        }
    }
}

impl SimInstance {
    /// Builds an instance from explicit parts. All ranks start at true time 0.
    pub fn new(
        seed: u64,
        clocks: Vec<LocalClock>,
        network: NetworkModel,
        collectives: BTreeMap<String, CollectiveModel>,
    ) -> Result<Self> {
        let p = clocks.len();
        if p == 0 {
            return Err(Error::Config("process count must be positive".into()));
        }
        network.validate()?;
        for m in collectives.values() {
            m.validate()?;
        }
        Ok(Self {
            p,
            seed,
            clocks,
            network,
            collectives,
            start_times: vec![0.0; p],
            trace: false,
        })
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    /// Runs the same program on every rank.
    pub fn run<T, F, Fut>(&self, f: F) -> Result<SimOutput<T>>
    where
        T: 'static,
        F: Fn(Rank) -> Fut,
        Fut: Future<Output = T> + 'static,
    {
        let programs: Vec<Pin<Box<dyn Future<Output = T>>>> = Vec::new();
        let world = self.world();
        let mut futures = programs;
        for id in 0..self.p {
            let rank = Rank { world: world.clone(), id, p: self.p };
            futures.push(Box::pin(f(rank)));
        }
        execute(self, world, futures)
    }

    fn world(&self) -> Rc<RefCell<World>> {
        let p = self.p;
        Rc::new(RefCell::new(World {
            p,
            now: 0.0,
            seq: 0,
            queue: BinaryHeap::new(),
            clocks: self.clocks.clone(),
            network: self.network.clone(),
            collectives: self.collectives.clone(),
            rng: seed::rng(self.seed, streams::ENGINE),
            mailboxes: vec![VecDeque::new(); p],
            states: vec![RankState::Runnable; p],
            last_arrival: vec![f64::NEG_INFINITY; p * p],
            gatherings: BTreeMap::new(),
            coll_calls: vec![0; p],
            coll_log: Vec::new(),
            trace: self.trace.then(Vec::new),
            error: None,
            stats: SimStats::default(),
        }))
    }
}

/// Runs one program per rank to completion.
pub fn run_programs<T: 'static>(instance: &SimInstance, programs: Vec<Program<T>>) -> Result<SimOutput<T>> {
    if programs.len() != instance.p {
        return Err(Error::InvalidArgument(format!(
            "{} programs for {} ranks",
            programs.len(),
            instance.p
        )));
    }
    let world = instance.world();
    let futures = programs
        .into_iter()
        .enumerate()
        .map(|(id, prog)| prog(Rank { world: world.clone(), id, p: instance.p }))
        .collect();
    execute(instance, world, futures)
}

fn execute<T>(
    instance: &SimInstance,
    world: Rc<RefCell<World>>,
    mut futures: Vec<Pin<Box<dyn Future<Output = T>>>>,
) -> Result<SimOutput<T>> {
    let p = instance.p;
    let mut results: Vec<Option<T>> = (0..p).map(|_| None).collect();
    {
        let mut w = world.borrow_mut();
        for (r, &t) in instance.start_times.iter().enumerate() {
            w.states[r] = RankState::Sleeping;
            w.schedule(t.max(0.0), EventKind::Wake(r));
        }
    }
    let mut cx = Context::from_waker(Waker::noop());
    let mut started = vec![false; p];

    loop {
        let next = world.borrow_mut().queue.pop();
        let Some(Reverse(ev)) = next else { break };
        let target = {
            let mut w = world.borrow_mut();
            w.stats.events += 1;
            w.now = ev.time;
            match ev.kind {
                EventKind::Wake(r) => Some(r),
                EventKind::Deliver(dst, msg) => {
                    let wake = matches!(w.states[dst], RankState::Recv { src, tag } if src == msg.src && tag == msg.tag);
                    w.mailboxes[dst].push_back(msg);
                    wake.then_some(dst)
                }
            }
        };
        let Some(r) = target else { continue };
        if results[r].is_some() {
            continue;
        }
        if !started[r] {
            started[r] = true;
            world.borrow_mut().record(r, TraceKind::Start, None);
        }
        if let Poll::Ready(v) = futures[r].as_mut().poll(&mut cx) {
            results[r] = Some(v);
            let mut w = world.borrow_mut();
            w.states[r] = RankState::Done;
            w.record(r, TraceKind::Finish, None);
        }
        if let Some(e) = world.borrow_mut().error.take() {
            return Err(e);
        }
    }

    let blocked: Vec<usize> = (0..p).filter(|&r| results[r].is_none()).collect();
    if !blocked.is_empty() {
        return Err(Error::Deadlock { blocked });
    }
    drop(futures);
    let w = Rc::try_unwrap(world)
        .ok()
        .expect("rank handles are dropped with their programs")
        .into_inner();
    Ok(SimOutput {
        results: results.into_iter().map(|r| r.expect("checked above")).collect(),
        trace: w.trace.unwrap_or_default(),
        collectives: w.coll_log,
        clocks: instance.clocks.clone(),
        end_time: w.now,
        stats: w.stats,
    })
}
