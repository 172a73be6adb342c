use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dist::Noise;
use crate::{Error, Result};

/// Number of communication rounds as a function of the process count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Rounds {
    /// `ceil(log2 p)`, at least one.
    #[default]
    Log2,
    /// `p - 1`, at least one.
    Linear,
    Constant(u32),
}

impl Rounds {
    pub fn eval(self, p: usize) -> u32 {
        let r = match self {
            Rounds::Log2 => usize::BITS - p.saturating_sub(1).leading_zeros(),
            Rounds::Linear => p.saturating_sub(1) as u32,
            Rounds::Constant(c) => c,
        };
        r.max(1)
    }
}

/// Per-rank delay between the collective's completion and the rank's exit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExitSkew {
    #[default]
    None,
    /// Rank `i` leaves `max * i / (p - 1)` after completion, plus Gaussian
    /// jitter; the last rank is the slowest.
    RankLinear {
        max: f64,
        #[serde(default)]
        sigma: f64,
    },
    /// Independent `N(mean, sigma^2)` delay per rank.
    Normal { mean: f64, sigma: f64 },
}

impl ExitSkew {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ExitSkew::None => true,
            ExitSkew::RankLinear { max, sigma } => max >= 0.0 && sigma >= 0.0,
            ExitSkew::Normal { mean, sigma } => mean.is_finite() && sigma >= 0.0,
        };
        ok.then_some(()).ok_or_else(|| Error::Config(format!("invalid exit skew {self:?}")))
    }

    fn draw<R: Rng + ?Sized>(&self, rank: usize, p: usize, rng: &mut R) -> f64 {
        let v = match *self {
            ExitSkew::None => 0.0,
            ExitSkew::RankLinear { max, sigma } => {
                let frac = if p > 1 { rank as f64 / (p - 1) as f64 } else { 0.0 };
                let z = if sigma > 0.0 { sigma * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
                max * frac + z
            }
            ExitSkew::Normal { mean, sigma } => mean + sigma * rng.sample::<f64, _>(StandardNormal),
        };
        v.max(0.0)
    }
}

/// A synthetic blocking collective.
///
/// The operation completes at `max(entries) + alpha + beta * msize * rounds(p)`
/// plus a non-negative noise draw; rank `i` leaves at completion plus its
/// exit-skew draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveModel {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub rounds: Rounds,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub exit_skew: ExitSkew,
    /// Factor (in `(0, 1]`) on the bandwidth term for back-to-back calls.
    #[serde(default = "one")]
    pub pipeline_discount: f64,
}

fn one() -> f64 {
    1.0
}

/// Result of one collective execution.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveOutcome {
    pub exits: Vec<f64>,
    pub completion: f64,
    pub ground_truth: f64,
    pub resamples: u32,
}

impl CollectiveModel {
    pub fn fixed(alpha: f64) -> Self {
        Self {
            alpha,
            beta: 0.0,
            rounds: Rounds::Log2,
            noise: Noise::None,
            exit_skew: ExitSkew::None,
            pipeline_discount: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::Config("collective alpha and beta must be >= 0".into()));
        }
        if !(self.pipeline_discount > 0.0 && self.pipeline_discount <= 1.0) {
            return Err(Error::Config("pipeline discount must lie in (0, 1]".into()));
        }
        self.noise.validate()?;
        self.exit_skew.validate()
    }

    /// Noise-free duration measured from the last entry.
    pub fn base_duration(&self, msize: u64, p: usize, pipelined: bool) -> f64 {
        let discount = if pipelined { self.pipeline_discount } else { 1.0 };
        self.alpha + discount * self.beta * msize as f64 * self.rounds.eval(p) as f64
    }

    pub fn execute<R: Rng + ?Sized>(
        &self,
        entries: &[f64],
        msize: u64,
        pipelined: bool,
        rng: &mut R,
    ) -> Result<CollectiveOutcome> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("collective with no participants".into()));
        }
        let p = entries.len();
        let max_entry = entries.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_entry = entries.iter().copied().fold(f64::INFINITY, f64::min);
        let (noise, resamples) = self.noise.sample_nonneg(rng);
        let completion = max_entry + self.base_duration(msize, p, pipelined) + noise;
        let exits: Vec<f64> = (0..p).map(|i| completion + self.exit_skew.draw(i, p, rng)).collect();
        let max_exit = exits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(CollectiveOutcome {
            exits,
            completion,
            ground_truth: max_exit - min_entry,
            resamples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rounds() {
        assert_eq!(Rounds::Log2.eval(1), 1);
        assert_eq!(Rounds::Log2.eval(2), 1);
        assert_eq!(Rounds::Log2.eval(4), 2);
        assert_eq!(Rounds::Log2.eval(5), 3);
        assert_eq!(Rounds::Log2.eval(1024), 10);
        assert_eq!(Rounds::Linear.eval(8), 7);
    }

    #[test]
    fn fixed_cost_simultaneous_entry() {
        let m = CollectiveModel::fixed(1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = m.execute(&[0.0, 0.0], 8, false, &mut rng).unwrap();
        assert_eq!(out.exits, vec![1e-5, 1e-5]);
        assert_eq!(out.ground_truth, 1e-5);
    }

    #[test]
    fn ground_truth_spans_first_entry() {
        let m = CollectiveModel::fixed(1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = m.execute(&[0.0, 4e-6], 8, false, &mut rng).unwrap();
        assert!((out.ground_truth - 1.4e-5).abs() < 1e-18);
    }

    #[test]
    fn rank_linear_skew() {
        let mut m = CollectiveModel::fixed(1e-5);
        m.exit_skew = ExitSkew::RankLinear { max: 4e-5, sigma: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = m.execute(&[0.0; 5], 0, false, &mut rng).unwrap();
        assert!((out.exits[4] - out.exits[0] - 4e-5).abs() < 1e-15);
        assert!((out.exits[2] - out.exits[0] - 2e-5).abs() < 1e-15);
    }

    #[test]
    fn pipelining_affects_bandwidth_term_only() {
        let mut m = CollectiveModel::fixed(1e-5);
        m.beta = 1e-9;
        m.pipeline_discount = 0.5;
        let cold = m.base_duration(1000, 4, false);
        let hot = m.base_duration(1000, 4, true);
        assert!((cold - (1e-5 + 2e-6)).abs() < 1e-15);
        assert!((hot - (1e-5 + 1e-6)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn exits_follow_entries(
            entries in proptest::collection::vec(0.0f64..1e-3, 1..32),
            alpha in 0.0f64..1e-4,
            seed in any::<u64>(),
        ) {
            let mut m = CollectiveModel::fixed(alpha);
            m.noise = Noise::bimodal();
            m.exit_skew = ExitSkew::Normal { mean: 1e-6, sigma: 2e-6 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = m.execute(&entries, 64, false, &mut rng).unwrap();
            let max_entry = entries.iter().copied().fold(0.0, f64::max);
            for &e in &out.exits {
                prop_assert!(e >= max_entry);
            }
            prop_assert!(out.ground_truth >= alpha);
        }
    }
}
