use serde::{Deserialize, Serialize};

use crate::sim::{comm, SimInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierKind {
    /// Message-based dissemination barrier owned by the benchmark.
    Dissemination,
    /// The synthetic collective named `barrier`, with its exit skew.
    Library,
}

/// True exit time of every rank from one barrier entered at `entries`.
pub fn barrier_exit_times(inst: &SimInstance, kind: BarrierKind, entries: &[f64]) -> Result<Vec<f64>> {
    if entries.len() != inst.p {
        return Err(Error::InvalidArgument(format!("{} entry times for {} ranks", entries.len(), inst.p)));
    }
    if inst.p < 2 {
        return Err(Error::InvalidArgument("a barrier needs at least two participants".into()));
    }
    let entries = entries.to_vec();
    let out = inst.run(move |rk| {
        let at = entries[rk.id()];
        async move {
            rk.sleep_until(at).await;
            match kind {
                BarrierKind::Dissemination => comm::barrier(&rk).await,
                BarrierKind::Library => {
                    rk.collective("barrier", 0).await;
                }
            }
            rk.true_now()
        }
    })?;
    Ok(out.results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{CollectiveModel, ExitSkew, LocalClock, NetworkModel};
    use std::collections::BTreeMap;

    const L: f64 = 2e-6;

    fn inst(p: usize, skew: ExitSkew) -> SimInstance {
        let mut lib = BTreeMap::new();
        lib.insert("barrier".to_string(), CollectiveModel { exit_skew: skew, ..CollectiveModel::fixed(0.0) });
        SimInstance::new(1, vec![LocalClock::perfect(); p], NetworkModel::deterministic(L), lib).unwrap()
    }

    #[test]
    fn two_ranks_take_one_round() {
        let exits = barrier_exit_times(&inst(2, ExitSkew::None), BarrierKind::Dissemination, &[0.0, 1e-6]).unwrap();
        assert!((exits[0] - (1e-6 + L)).abs() < 1e-15, "{}", exits[0]);
        assert!((exits[1] - L).abs() < 1e-15, "{}", exits[1]);
        let same = barrier_exit_times(&inst(2, ExitSkew::None), BarrierKind::Dissemination, &[1e-6, 1e-6]).unwrap();
        assert!(same.iter().all(|&e| (e - (1e-6 + L)).abs() < 1e-15));
    }

    #[test]
    fn eight_ranks_within_three_rounds() {
        let entries: Vec<f64> = (0..8).map(|r| 1e-7 * r as f64).collect();
        let exits = barrier_exit_times(&inst(8, ExitSkew::None), BarrierKind::Dissemination, &entries).unwrap();
        let emax = 7e-7;
        for e in &exits {
            assert!(*e >= emax && *e <= emax + 3.0 * L + 1e-15, "{e}");
        }
    }

    #[test]
    fn skewed_entries_exit_after_the_last_arrival() {
        let entries = [0.0, 5e-5, 1e-5, 3e-5, 2e-5];
        let exits = barrier_exit_times(&inst(5, ExitSkew::None), BarrierKind::Dissemination, &entries).unwrap();
        for &e in &exits {
            assert!((5e-5 + L - 1e-15..=5e-5 + 3.0 * L + 1e-15).contains(&e), "{e}");
        }
        let lo = exits.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = exits.iter().copied().fold(0.0, f64::max);
        assert!(hi - lo <= 2.0 * L + 1e-15);
    }

    #[test]
    fn library_barrier_applies_exit_skew() {
        let perfect = barrier_exit_times(&inst(4, ExitSkew::None), BarrierKind::Library, &[0.0, 1e-6, 2e-6, 0.0]).unwrap();
        assert!(perfect.iter().all(|&e| e == 2e-6));
        let skew = ExitSkew::RankLinear { max: 4e-5, sigma: 0.0 };
        let ex = barrier_exit_times(&inst(16, skew), BarrierKind::Library, &[0.0; 16]).unwrap();
        assert!((ex[15] - ex[0] - 4e-5).abs() < 1e-15);
    }
}
