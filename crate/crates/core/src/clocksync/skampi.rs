use super::{now, tags, SyncConfig};
use crate::sim::{comm, Rank};

/// Min/max envelope offset estimate over `n` ping-pongs.
///
/// On `p1` the result is `t_p2 - t_p1`; on `p2` it is `t_p1 - t_p2`. Times
/// are local readings minus `origin`. Uninvolved ranks get 0.
///
/// The `p2` side bounds the offset from above with the previous exchange's
/// post-send reading, so both sides are unbiased under symmetric latency.
pub async fn skampi_pingpong(rk: &Rank, p1: usize, p2: usize, n: usize, origin: f64) -> f64 {
    let me = rk.id();
    let mut td_min = f64::NEG_INFINITY;
    let mut td_max = f64::INFINITY;
    if me == p1 {
        for _ in 0..n {
            let s_last = now(rk, origin);
            rk.send(p2, tags::SKAMPI, vec![s_last]);
            let t_last = rk.recv(p2, tags::SKAMPI).await[0];
            let s_now = now(rk, origin);
            td_min = td_min.max(t_last - s_now);
            td_max = td_max.min(t_last - s_last);
        }
    } else if me == p2 {
        let mut prev_t_now: Option<f64> = None;
        let mut literal_max = f64::INFINITY;
        for _ in 0..n {
            let s_last = rk.recv(p1, tags::SKAMPI).await[0];
            let t_last = now(rk, origin);
            rk.send(p1, tags::SKAMPI, vec![t_last]);
            let t_now = now(rk, origin);
            td_min = td_min.max(s_last - t_now);
            literal_max = literal_max.min(s_last - t_last);
            if let Some(prev) = prev_t_now {
                td_max = td_max.min(s_last - prev);
            }
            prev_t_now = Some(t_now);
        }
        if !td_max.is_finite() {
            td_max = literal_max;
        }
    } else {
        return 0.0;
    }
    (td_min + td_max) / 2.0
}

/// Offsets of every rank relative to this rank, `diffs[j] = t_j - t_me`.
/// `-diffs[root]` is this rank's offset from root.
pub async fn skampi_sync(rk: &Rank, root: usize, cfg: &SyncConfig) -> Vec<f64> {
    let p = rk.size();
    let me = rk.id();
    let mut diffs = vec![0.0; p];
    for i in 0..p {
        if i == root {
            continue;
        }
        comm::barrier(rk).await;
        if me == root {
            diffs[i] = skampi_pingpong(rk, root, i, cfg.n_pingpongs, 0.0).await;
        } else if me == i {
            diffs[root] = skampi_pingpong(rk, root, i, cfg.n_pingpongs, 0.0).await;
        }
    }
    let tmp = comm::bcast(rk, root, if me == root { diffs.clone() } else { Vec::new() }).await;
    let to_root = diffs[root];
    for (i, d) in diffs.iter_mut().enumerate() {
        if i != root {
            *d = tmp[i] + to_root;
        }
    }
    diffs
}
