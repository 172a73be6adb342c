use super::Flags;
use crate::clocksync::GlobalClock;
use crate::sim::{comm, Rank};

/// One rank's window schedule. Observation `i` may start at global time
/// `start_time + (i + 1) * win_size` and must finish within one window.
///
/// An infinite window never waits and never flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub clock: GlobalClock,
    pub start_time: f64,
    pub win_size: f64,
    next_win: f64,
}

impl Window {
    pub fn new(clock: GlobalClock, start_time: f64, win_size: f64) -> Self {
        Self { clock, start_time, win_size, next_win: start_time }
    }

    /// Global start instant of observation `counter`.
    pub fn target(&self, counter: usize) -> f64 {
        self.start_time + (counter + 1) as f64 * self.win_size
    }

    /// Busy-waits for the start of observation `counter`.
    pub async fn start(&mut self, rk: &Rank, counter: usize) -> Flags {
        if !self.win_size.is_finite() {
            return Flags::NONE;
        }
        self.next_win = self.target(counter);
        let w = rk.wait_until_local(self.clock.local_for(self.next_win)).await;
        if w.late {
            Flags::STARTED_LATE
        } else {
            Flags::NONE
        }
    }

    /// Checks whether the observation overran its window.
    pub fn stop(&self, rk: &Rank) -> Flags {
        if !self.win_size.is_finite() {
            return Flags::NONE;
        }
        let now = self.clock.global(rk.read_clock());
        if now - self.next_win > self.win_size {
            Flags::TOOK_TOO_LONG
        } else {
            Flags::NONE
        }
    }
}

/// Root reads its global clock, adds `lead` and broadcasts the result as
/// the common start time.
pub async fn initialize_window(rk: &Rank, root: usize, clock: &GlobalClock, lead: f64) -> f64 {
    let data = if rk.id() == root { vec![clock.global(rk.read_clock()) + lead] } else { Vec::new() };
    comm::bcast(rk, root, data).await[0]
}

/// Longest local duration over ranks of `n` broadcasts from `root`.
pub async fn bcast_lead(rk: &Rank, root: usize, n: usize) -> f64 {
    let s = rk.read_clock();
    for _ in 0..n {
        comm::bcast(rk, root, vec![0.0]).await;
    }
    let d = rk.read_clock() - s;
    comm::allreduce_max(rk, d).await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{LocalClock, NetworkModel, SimInstance};
    use std::collections::BTreeMap;

    fn inst(p: usize) -> SimInstance {
        let clocks = (0..p).map(|r| LocalClock::new(0.01 * r as f64, 0.0, 0.0, 1e-9).unwrap()).collect();
        SimInstance::new(2, clocks, NetworkModel::deterministic(1e-6), BTreeMap::new()).unwrap()
    }

    #[test]
    fn waits_for_each_window() {
        let out = inst(2)
            .run(|rk| async move {
                let gc = GlobalClock::from_offset(0.01 * rk.id() as f64);
                let start = initialize_window(&rk, 0, &gc, 1e-4).await;
                let mut w = Window::new(gc, start, 1e-4);
                let mut seen = Vec::new();
                for i in 0..3 {
                    let f = w.start(&rk, i).await;
                    seen.push((f, gc.global(rk.read_clock()) - w.target(i), w.stop(&rk)));
                }
                seen
            })
            .unwrap();
        for rank in &out.results {
            for &(f, lag, stop) in rank {
                assert!(f.is_valid() && stop.is_valid());
                assert!((-1e-12..2e-9).contains(&lag), "{lag}");
            }
        }
    }

    #[test]
    fn late_start_and_overrun_are_flagged() {
        let out = inst(1)
            .run(|rk| async move {
                let gc = GlobalClock::default();
                let mut w = Window::new(gc, 0.0, 1e-5);
                rk.compute(5e-5).await;
                let late = w.start(&rk, 0).await;
                let mut w2 = Window::new(gc, rk.read_clock(), 1e-5);
                let ok = w2.start(&rk, 0).await;
                rk.compute(3e-5).await;
                (late, ok, w2.stop(&rk))
            })
            .unwrap();
        let (late, ok, overran) = out.results[0];
        assert_eq!(late, Flags::STARTED_LATE);
        assert_eq!(ok, Flags::NONE);
        assert_eq!(overran, Flags::TOOK_TOO_LONG);
    }

    #[test]
    fn infinite_window_never_flags() {
        let out = inst(1)
            .run(|rk| async move {
                let mut w = Window::new(GlobalClock::default(), 0.0, f64::INFINITY);
                let f = w.start(&rk, 3).await;
                (f, w.stop(&rk))
            })
            .unwrap();
        assert_eq!(out.results[0], (Flags::NONE, Flags::NONE));
    }
}
