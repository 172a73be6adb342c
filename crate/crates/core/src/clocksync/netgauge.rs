use std::collections::VecDeque;

use super::{tags, SyncConfig};
use crate::sim::Rank;

const CONTINUE: f64 = 1.0;
const STOP: f64 = 0.0;

/// Pairwise offset `t_client - t_server`, computed on the client from
/// ping-pongs that run until the round-trip time stops improving.
///
/// The client keeps the last `n_pingpongs` RTTs and stops once that window
/// is full and the current RTT exceeds its minimum, or after
/// `10 * n_pingpongs` exchanges. Each request carries a continue/stop flag
/// so the server knows when to leave. The server returns 0.
pub async fn netgauge_offset(rk: &Rank, client: usize, server: usize, cfg: &SyncConfig) -> f64 {
    let me = rk.id();
    if me == client {
        let window = cfg.n_pingpongs.max(1);
        let cap = 10 * window;
        let mut recent: VecDeque<f64> = VecDeque::with_capacity(window);
        let mut diff = 0.0;
        for _ in 0..cap {
            let s_time = rk.read_clock();
            rk.send(server, tags::NG, vec![CONTINUE, s_time]);
            let tremote = rk.recv(server, tags::NG).await[0];
            let rtt = rk.read_clock() - s_time;
            diff = s_time + rtt / 2.0 - tremote;
            let full = recent.len() == window;
            let min = recent.iter().copied().fold(f64::INFINITY, f64::min);
            if full && rtt > min {
                break;
            }
            if full {
                recent.pop_front();
            }
            recent.push_back(rtt);
        }
        rk.send(server, tags::NG, vec![STOP]);
        diff
    } else if me == server {
        loop {
            let msg = rk.recv(client, tags::NG).await;
            if msg[0] == STOP {
                break;
            }
            let t = rk.read_clock();
            rk.send(client, tags::NG, vec![t]);
        }
        0.0
    } else {
        0.0
    }
}

/// Tree-structured offset computation. Returns this rank's `myoffset`,
/// the root's clock minus this rank's clock.
pub async fn netgauge_sync(rk: &Rank, root: usize, cfg: &SyncConfig) -> f64 {
    let p = rk.size();
    let v = (rk.id() + p - root) % p;
    let actual = |virt: usize| (virt + root) % p;
    let maxpower = 1usize << p.ilog2();
    let mut myoffset = 0.0;

    if v < maxpower {
        let mut diffs = vec![0.0; maxpower];
        let mut round = 1u32;
        while (1usize << round) <= maxpower {
            let span = 1usize << round;
            let half = span >> 1;
            if v.is_multiple_of(span) {
                let server = v + half;
                diffs[server] = netgauge_offset(rk, rk.id(), actual(server), cfg).await;
                let recvd = rk.recv(actual(server), tags::NG_DIFFS).await;
                for (i, d) in recvd.iter().enumerate() {
                    diffs[server + i + 1] = diffs[server] + d;
                }
            } else if v % span == half {
                let client = v - half;
                netgauge_offset(rk, actual(client), rk.id(), cfg).await;
                rk.send(actual(client), tags::NG_DIFFS, diffs[v + 1..v + half].to_vec());
            }
            round += 1;
        }
        if v == 0 {
            for (j, &d) in diffs.iter().enumerate().skip(1) {
                rk.send(actual(j), tags::NG_SCATTER, vec![d]);
            }
        } else {
            myoffset = rk.recv(root, tags::NG_SCATTER).await[0];
        }
    }

    if maxpower < p {
        if v < p - maxpower {
            let server = v + maxpower;
            let diff = netgauge_offset(rk, rk.id(), actual(server), cfg).await + myoffset;
            rk.send(actual(server), tags::NG_REMAINING, vec![diff]);
        } else if v >= maxpower {
            let client = v - maxpower;
            netgauge_offset(rk, actual(client), rk.id(), cfg).await;
            myoffset = rk.recv(actual(client), tags::NG_REMAINING).await[0];
        }
    }
    myoffset
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Jitter, LocalClock, NetworkModel, SimInstance};
    use std::collections::BTreeMap;

    fn run(offsets: &[f64], net: NetworkModel, root: usize) -> Vec<f64> {
        let clocks = offsets.iter().map(|&o| LocalClock::new(o, 0.0, 0.0, 1e-9).unwrap()).collect();
        let inst = SimInstance::new(9, clocks, net, BTreeMap::new()).unwrap();
        let cfg = SyncConfig::default();
        inst.run(move |rk| async move { netgauge_sync(&rk, root, &cfg).await }).unwrap().results
    }

    #[test]
    fn identical_clocks() {
        for off in run(&[0.5; 6], NetworkModel::deterministic(1e-6), 0) {
            assert!(off.abs() <= 2e-9);
        }
    }

    #[test]
    fn additive_chain_is_exact() {
        let offs = [0.0, 1e-4, -2e-4, 3.3e-4];
        let got = run(&offs, NetworkModel::deterministic(1.5e-6), 0);
        for (r, &o) in offs.iter().enumerate() {
            assert!((got[r] - (offs[0] - o)).abs() <= 4e-9, "rank {r}: {} vs {}", got[r], offs[0] - o);
        }
    }

    #[test]
    fn remainder_ranks_and_other_root() {
        let offs = [1e-4, 0.0, -2e-4, 3e-4, 5e-5, -1e-5, 7e-5];
        let got = run(&offs, NetworkModel::deterministic(1.5e-6), 2);
        for (r, &o) in offs.iter().enumerate() {
            assert!((got[r] - (offs[2] - o)).abs() <= 6e-9, "rank {r}");
        }
    }

    #[test]
    fn terminates_under_jitter() {
        let net = NetworkModel { jitter: Jitter::ShiftedExponential { mean: 2e-7 }, ..NetworkModel::deterministic(1.5e-6) };
        let got = run(&[0.0, 1e-3], net, 0);
        assert!((got[1] + 1e-3).abs() < 1e-6);
    }
}
