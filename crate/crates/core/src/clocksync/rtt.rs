use super::{tags, SyncConfig};
use crate::dataproc::{mean, tukey_filter};
use crate::sim::Rank;
use crate::{Error, Result};

/// Mean round-trip time between `p1` (echo side) and `p2` (timing side),
/// after outlier removal. Returns 0 on `p1` and on uninvolved ranks.
pub async fn compute_rtt(rk: &Rank, p1: usize, p2: usize, cfg: &SyncConfig) -> Result<f64> {
    if p1 == p2 {
        return Err(Error::InvalidArgument("compute_rtt needs two distinct ranks".into()));
    }
    let me = rk.id();
    if me == p1 {
        for _ in 0..cfg.warmup_rounds {
            rk.recv(p2, tags::RTT_WARMUP).await;
            rk.send(p2, tags::RTT_WARMUP, vec![0.0]);
        }
        for _ in 0..cfg.n_pingpongs {
            rk.recv(p2, tags::RTT).await;
            let t = rk.read_clock();
            rk.send(p2, tags::RTT, vec![t]);
        }
        Ok(0.0)
    } else if me == p2 {
        for _ in 0..cfg.warmup_rounds {
            rk.send(p1, tags::RTT_WARMUP, vec![0.0]);
            rk.recv(p1, tags::RTT_WARMUP).await;
        }
        let mut rtts = Vec::with_capacity(cfg.n_pingpongs);
        for _ in 0..cfg.n_pingpongs {
            let s = rk.read_clock();
            rk.send(p1, tags::RTT, vec![s]);
            rk.recv(p1, tags::RTT).await;
            rtts.push(rk.read_clock() - s);
        }
        let kept = tukey_filter(&rtts).kept;
        if kept.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "only {} RTT samples survived filtering",
                kept.len()
            )));
        }
        Ok(mean(&kept))
    } else {
        Ok(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Jitter, LocalClock, NetworkModel, SimInstance};
    use std::collections::BTreeMap;

    fn instance(seed: u64, base: f64, jitter: Jitter) -> SimInstance {
        let clocks = vec![LocalClock::new(0.3, 2e-6, 0.0, 1e-9).unwrap(), LocalClock::new(-0.1, -3e-6, 0.0, 1e-9).unwrap()];
        let net = NetworkModel { jitter, ..NetworkModel::deterministic(base) };
        SimInstance::new(seed, clocks, net, BTreeMap::new()).unwrap()
    }

    #[test]
    fn deterministic_latency_gives_two_l() {
        let inst = instance(1, 2e-6, Jitter::Deterministic);
        let cfg = SyncConfig::default();
        let out = inst.run(move |rk| async move { compute_rtt(&rk, 0, 1, &cfg).await.unwrap() }).unwrap();
        assert_eq!(out.results[0], 0.0);
        assert!((out.results[1] - 4e-6).abs() <= 2e-9, "{}", out.results[1]);
    }

    #[test]
    fn jittered_estimate_close_to_true_mean() {
        let truth = 2.0 * (2e-6 + 1e-6);
        let estimates: Vec<f64> = (0..50)
            .map(|seed| {
                let inst = instance(seed, 2e-6, Jitter::ShiftedExponential { mean: 1e-6 });
                let cfg = SyncConfig::default();
                inst.run(move |rk| async move { compute_rtt(&rk, 0, 1, &cfg).await.unwrap() }).unwrap().results[1]
            })
            .collect();
        let avg = mean(&estimates);
        assert!((avg - truth).abs() <= 0.05 * truth, "{avg}");
    }
}
