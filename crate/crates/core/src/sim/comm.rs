//! Message-based collective helpers built on point-to-point operations.
//!
//! These are the "infrastructure" collectives the synchronization algorithms
//! and benchmark drivers use among themselves. They travel through the
//! simulated network, so their cost is part of what is measured. The
//! synthetic collectives under test are reached through
//! [`Rank::collective`](super::Rank::collective) instead.

use super::Rank;

const BARRIER: u32 = 0x1000_0000;
const BCAST: u32 = 0x2000_0000;
const GATHER: u32 = 0x3000_0000;
const SCATTER: u32 = 0x4000_0000;

/// Dissemination barrier: `ceil(log2 p)` rounds of one send and one receive.
pub async fn barrier(rk: &Rank) {
    let p = rk.size();
    let me = rk.id();
    let mut dist = 1;
    let mut round = 0;
    while dist < p {
        rk.send((me + dist) % p, BARRIER + round, Vec::new());
        rk.recv((me + p - dist) % p, BARRIER + round).await;
        dist <<= 1;
        round += 1;
    }
}

/// Binomial-tree broadcast. Non-root ranks ignore `data`.
pub async fn bcast(rk: &Rank, root: usize, data: Vec<f64>) -> Vec<f64> {
    let p = rk.size();
    let v = (rk.id() + p - root) % p;
    let phys = |v: usize| (v + root) % p;
    let mut buf = data;
    let mut mask = 1;
    while mask < p {
        if v & mask != 0 {
            buf = rk.recv(phys(v - mask), BCAST).await;
            break;
        }
        mask <<= 1;
    }
    mask >>= 1;
    while mask > 0 {
        if v + mask < p {
            rk.send(phys(v + mask), BCAST, buf.clone());
        }
        mask >>= 1;
    }
    buf
}

/// Linear gather. Returns every rank's contribution at `root`, `None`
/// elsewhere.
pub async fn gather(rk: &Rank, root: usize, data: Vec<f64>) -> Option<Vec<Vec<f64>>> {
    if rk.id() != root {
        rk.send(root, GATHER, data);
        return None;
    }
    let mut all = Vec::with_capacity(rk.size());
    let mut own = Some(data);
    for r in 0..rk.size() {
        if r == root {
            all.push(own.take().expect("own contribution"));
        } else {
            all.push(rk.recv(r, GATHER).await);
        }
    }
    Some(all)
}

/// Linear scatter. `chunks` is read at `root` only.
pub async fn scatter(rk: &Rank, root: usize, chunks: Option<Vec<Vec<f64>>>) -> Vec<f64> {
    if rk.id() != root {
        return rk.recv(root, SCATTER).await;
    }
    let mut chunks = chunks.expect("root provides chunks");
    assert_eq!(chunks.len(), rk.size(), "one chunk per rank");
    let mut own = Vec::new();
    for (r, c) in chunks.drain(..).enumerate() {
        if r == root {
            own = c;
        } else {
            rk.send(r, SCATTER, c);
        }
    }
    own
}

/// Element-wise reduction delivered to every rank.
pub async fn allreduce(rk: &Rank, data: Vec<f64>, op: fn(f64, f64) -> f64) -> Vec<f64> {
    let reduced = gather(rk, 0, data).await.map(|all| {
        let mut acc = all[0].clone();
        for v in &all[1..] {
            for (a, b) in acc.iter_mut().zip(v) {
                *a = op(*a, *b);
            }
        }
        acc
    });
    bcast(rk, 0, reduced.unwrap_or_default()).await
}

pub async fn allreduce_max(rk: &Rank, value: f64) -> f64 {
    allreduce(rk, vec![value], f64::max).await[0]
}
