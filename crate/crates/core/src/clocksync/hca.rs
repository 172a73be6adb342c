use serde::{Deserialize, Serialize};

use super::jk::{serve_fitpoint, take_fitpoint};
use super::{compute_rtt, linear_fit, merge_lms, now, skampi_pingpong, tags, GlobalClock, LinearModel, ModelInterval, SyncConfig};
use crate::sim::{comm, Rank};
use crate::Result;

/// How HCA determines model intercepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HcaIntercepts {
    /// One offset measurement between root and each rank after the tree.
    Direct,
    /// One offset measurement per tree edge, merged along the path.
    Hierarchical,
    /// Keep the regression intercepts.
    Regression,
}

/// Fits the drift of `client` against `reference`. The client gets the
/// model and its confidence box; everyone else gets `None`.
pub async fn learn_model_hca(
    rk: &Rank,
    reference: usize,
    client: usize,
    cfg: &SyncConfig,
    rtt: f64,
    origin: f64,
) -> Result<Option<(LinearModel, ModelInterval)>> {
    let me = rk.id();
    if me == reference {
        for _ in 0..cfg.n_fitpts {
            serve_fitpoint(rk, client, cfg.n_exchanges, origin, tags::HCA_FIT).await;
        }
        Ok(None)
    } else if me == client {
        let mut pts = Vec::with_capacity(cfg.n_fitpts);
        for _ in 0..cfg.n_fitpts {
            pts.push(take_fitpoint(rk, reference, cfg.n_exchanges, rtt, origin, tags::HCA_FIT).await);
        }
        Ok(Some(linear_fit(&pts)?))
    } else {
        Ok(None)
    }
}

/// Re-anchors `lm` on a fresh offset measurement between `client` and
/// `p_ref`. Only the client's model changes.
pub async fn set_intercept(rk: &Rank, lm: &mut LinearModel, client: usize, p_ref: usize, n_pingpongs: usize, origin: f64) {
    let me = rk.id();
    if me == client {
        let diff = -skampi_pingpong(rk, client, p_ref, n_pingpongs, origin).await;
        let ts = now(rk, origin);
        lm.intercept = lm.slope * (-ts) + diff;
    } else if me == p_ref {
        skampi_pingpong(rk, client, p_ref, n_pingpongs, origin).await;
    }
}

fn flatten(models: &[LinearModel]) -> Vec<f64> {
    models.iter().flat_map(|m| m.to_vec()).collect()
}

fn unflatten(v: &[f64]) -> Vec<LinearModel> {
    v.chunks_exact(2).map(LinearModel::from_slice).collect()
}

/// Hierarchical drift-model synchronization.
///
/// Models are learned pairwise along a binomial tree over the largest
/// power-of-two prefix of ranks (relative to `root`), the remaining ranks
/// attach to that prefix in one extra round, and root merges every path
/// into a model against its own clock. The returned clock's origin is this
/// rank's reading when synchronization started.
pub async fn hca_sync(rk: &Rank, root: usize, cfg: &SyncConfig, mode: HcaIntercepts) -> Result<GlobalClock> {
    let origin = rk.read_clock();
    let p = rk.size();
    let me = rk.id();
    let v = (me + p - root) % p;
    let actual = |virt: usize| (virt + root) % p;
    let maxpower = 1usize << p.ilog2();
    let hier = mode == HcaIntercepts::Hierarchical;
    let mut models = vec![LinearModel::IDENTITY; p];

    if v < maxpower {
        let mut round = 1u32;
        while (1usize << round) <= maxpower {
            let span = 1usize << round;
            let half = span >> 1;
            if v.is_multiple_of(span) {
                let client = actual(v + half);
                compute_rtt(rk, me, client, cfg).await?;
                learn_model_hca(rk, me, client, cfg, 0.0, origin).await?;
                if hier {
                    set_intercept(rk, &mut LinearModel::default(), client, me, cfg.n_pingpongs, origin).await;
                }
                let recvd = unflatten(&rk.recv(client, tags::HCA_MODELS).await);
                let c = v + half;
                models[c] = recvd[0];
                for i in 1..half {
                    models[c + i] = merge_lms(models[c], recvd[i]);
                }
            } else if v % span == half {
                let p_ref = actual(v - half);
                let rtt = compute_rtt(rk, p_ref, me, cfg).await?;
                let (mut lm, _) = learn_model_hca(rk, p_ref, me, cfg, rtt, origin).await?.expect("client fits");
                if hier {
                    set_intercept(rk, &mut lm, me, p_ref, cfg.n_pingpongs, origin).await;
                }
                models[v] = lm;
                rk.send(p_ref, tags::HCA_MODELS, flatten(&models[v..v + half]));
            }
            round += 1;
        }
    }

    if maxpower < p {
        if v < p - maxpower {
            let client = actual(v + maxpower);
            compute_rtt(rk, me, client, cfg).await?;
            learn_model_hca(rk, me, client, cfg, 0.0, origin).await?;
            if hier {
                set_intercept(rk, &mut LinearModel::default(), client, me, cfg.n_pingpongs, origin).await;
            }
        } else if v >= maxpower {
            let p_ref = actual(v - maxpower);
            let rtt = compute_rtt(rk, p_ref, me, cfg).await?;
            let (mut lm, _) = learn_model_hca(rk, p_ref, me, cfg, rtt, origin).await?.expect("client fits");
            if hier {
                set_intercept(rk, &mut lm, me, p_ref, cfg.n_pingpongs, origin).await;
            }
            rk.send(root, tags::HCA_GATHER, lm.to_vec().to_vec());
        }
        if v == 0 {
            for q in maxpower..p {
                let lm = LinearModel::from_slice(&rk.recv(actual(q), tags::HCA_GATHER).await);
                models[q] = merge_lms(models[q - maxpower], lm);
            }
        }
    }

    let mut lm = if v == 0 {
        for (q, m) in models.iter().enumerate().skip(1) {
            rk.send(actual(q), tags::HCA_SCATTER, m.to_vec().to_vec());
        }
        LinearModel::IDENTITY
    } else {
        LinearModel::from_slice(&rk.recv(root, tags::HCA_SCATTER).await)
    };

    if mode == HcaIntercepts::Direct {
        if me == root {
            for i in (0..p).filter(|&i| i != root) {
                set_intercept(rk, &mut LinearModel::default(), i, root, cfg.n_pingpongs, origin).await;
            }
        } else {
            set_intercept(rk, &mut lm, me, root, cfg.n_pingpongs, origin).await;
        }
    }
    comm::barrier(rk).await;
    Ok(GlobalClock { origin, model: lm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{LocalClock, NetworkModel, SimInstance};
    use std::collections::BTreeMap;

    fn exact_clocks(p: usize) -> Vec<LocalClock> {
        (0..p)
            .map(|r| {
                let x = r as f64;
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                LocalClock::new(1e-3 * (x * 0.7).sin(), 2e-6 * x * sign, 0.0, 1e-18).unwrap()
            })
            .collect()
    }

    fn staggered(p: usize) -> SimInstance {
        let mut inst = SimInstance::new(5, exact_clocks(p), NetworkModel::deterministic(1.5e-6), BTreeMap::new()).unwrap();
        inst.start_times = (0..p).map(|r| if r == 0 { 0.0 } else { 1e-4 * (1 + (r * 37) % 11) as f64 }).collect();
        inst
    }

    const SMALL: SyncConfig =
        SyncConfig { n_fitpts: 100, n_exchanges: 5, n_pingpongs: 10, hierarchical_intercepts: false, win_size: 1e-3, warmup_rounds: 2 };

    #[test]
    fn merged_models_match_direct_fits() {
        for p in [2, 4, 5, 8] {
            let inst = staggered(p);
            let out = inst
                .run(move |rk| async move {
                    let cfg = SMALL;
                    let gc = hca_sync(&rk, 0, &cfg, HcaIntercepts::Regression).await.unwrap();
                    let mut direct = LinearModel::IDENTITY;
                    for i in 1..rk.size() {
                        let rtt = compute_rtt(&rk, 0, i, &cfg).await.unwrap();
                        if let Some((lm, _)) = learn_model_hca(&rk, 0, i, &cfg, rtt, gc.origin).await.unwrap() {
                            direct = lm;
                        }
                    }
                    (gc.model, direct)
                })
                .unwrap();
            for (r, (merged, direct)) in out.results.iter().enumerate().skip(1) {
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
                assert!(rel(merged.slope, direct.slope) <= 1e-9, "p={p} r={r}: {merged:?} vs {direct:?}");
                assert!(rel(merged.intercept, direct.intercept) <= 1e-9, "p={p} r={r}: {merged:?} vs {direct:?}");
            }
        }
    }

    #[test]
    fn direct_intercepts_track_true_offsets() {
        let p = 6;
        let inst = staggered(p);
        let clocks = inst.clocks.clone();
        let out = inst
            .run(move |rk| async move {
                let gc = hca_sync(&rk, 0, &SMALL, HcaIntercepts::Direct).await.unwrap();
                (gc, rk.true_now())
            })
            .unwrap();
        let t = out.results.iter().map(|r| r.1).fold(0.0, f64::max);
        let root_g = out.results[0].0.global(clocks[0].ideal(t));
        for r in 1..p {
            let g = out.results[r].0.global(clocks[r].ideal(t));
            assert!((g - root_g).abs() < 1e-8, "rank {r}: {}", g - root_g);
        }
    }

    #[test]
    fn nonzero_root() {
        let inst = staggered(5);
        let clocks = inst.clocks.clone();
        let out = inst
            .run(move |rk| async move {
                let gc = hca_sync(&rk, 3, &SMALL, HcaIntercepts::Hierarchical).await.unwrap();
                (gc, rk.true_now())
            })
            .unwrap();
        assert_eq!(out.results[3].0.model, LinearModel::IDENTITY);
        let t = out.results[3].1;
        let root_g = out.results[3].0.global(clocks[3].ideal(t));
        for r in 0..5 {
            let g = out.results[r].0.global(clocks[r].ideal(t));
            assert!((g - root_g).abs() < 1e-8, "rank {r}");
        }
    }
}
