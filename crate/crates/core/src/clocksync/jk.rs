use super::{compute_rtt, linear_fit, now, tags, FitPoint, LinearModel, SyncConfig};
use crate::sim::{comm, Rank};
use crate::Result;

/// Reference side of one fitpoint: answers `n_exchanges` requests with its
/// current time.
pub(crate) async fn serve_fitpoint(rk: &Rank, client: usize, n_exchanges: usize, origin: f64, tag: u32) {
    for _ in 0..n_exchanges {
        rk.recv(client, tag).await;
        let t = now(rk, origin);
        rk.send(client, tag, vec![t]);
    }
}

/// Client side of one fitpoint: the (lower) median RTT/2-corrected offset
/// together with the local timestamp of that exchange.
pub(crate) async fn take_fitpoint(
    rk: &Rank,
    reference: usize,
    n_exchanges: usize,
    rtt: f64,
    origin: f64,
    tag: u32,
) -> FitPoint {
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(n_exchanges);
    for _ in 0..n_exchanges {
        rk.send(reference, tag, vec![0.0]);
        let tremote = rk.recv(reference, tag).await[0];
        let local = now(rk, origin);
        samples.push((local - tremote - rtt / 2.0, local));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (y, x) = samples[(samples.len() - 1) / 2];
    FitPoint { x, y }
}

/// Drift model of every rank against `root`, learned serially in raw local
/// time. Root's model is the identity.
pub async fn jk_sync(rk: &Rank, root: usize, cfg: &SyncConfig) -> Result<LinearModel> {
    let p = rk.size();
    let me = rk.id();
    let mut rtt = 0.0;
    for i in (0..p).filter(|&i| i != root) {
        let r = compute_rtt(rk, root, i, cfg).await?;
        if me == i {
            rtt = r;
        }
    }
    let mut lm = LinearModel::IDENTITY;
    if me == root {
        for _ in 0..cfg.n_fitpts {
            for r in (0..p).filter(|&r| r != root) {
                serve_fitpoint(rk, r, cfg.n_exchanges, 0.0, tags::JK_FIT).await;
            }
        }
    } else {
        let mut pts = Vec::with_capacity(cfg.n_fitpts);
        for _ in 0..cfg.n_fitpts {
            pts.push(take_fitpoint(rk, root, cfg.n_exchanges, rtt, 0.0, tags::JK_FIT).await);
        }
        lm = linear_fit(&pts)?.0;
    }
    comm::barrier(rk).await;
    Ok(lm)
}
