use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Additive latency jitter on top of a link's base latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Jitter {
    #[default]
    Deterministic,
    /// Exponentially distributed extra delay with the given mean.
    ShiftedExponential { mean: f64 },
    /// Extra delay `exp(N(mu, sigma^2))`.
    Lognormal { mu: f64, sigma: f64 },
}

impl Jitter {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Jitter::Deterministic => Ok(()),
            Jitter::ShiftedExponential { mean } if mean > 0.0 && mean.is_finite() => Ok(()),
            Jitter::Lognormal { mu, sigma } if mu.is_finite() && sigma >= 0.0 => Ok(()),
            ref j => Err(Error::Config(format!("invalid jitter {j:?}"))),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Jitter::Deterministic => 0.0,
            Jitter::ShiftedExponential { mean } => mean,
            Jitter::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Jitter::Deterministic => 0.0,
            Jitter::ShiftedExponential { mean } => {
                Exp::new(1.0 / mean).expect("validated").sample(rng)
            }
            Jitter::Lognormal { mu, sigma } => {
                LogNormal::new(mu, sigma).expect("validated").sample(rng)
            }
        }
    }
}

/// One Gaussian mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sigma: f64,
}

/// Additive noise on a collective's duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Noise {
    #[default]
    None,
    Normal { mean: f64, sigma: f64 },
    Exponential { mean: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Mixture { components: Vec<Component> },
}

const MAX_RESAMPLES: u32 = 10_000;

impl Noise {
    /// The default bimodal mixture: 90% near zero, 10% near +50 µs.
    pub fn bimodal() -> Self {
        Noise::Mixture {
            components: vec![
                Component { weight: 0.9, mean: 5e-6, sigma: 1e-6 },
                Component { weight: 0.1, mean: 5e-5, sigma: 1e-6 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Noise::None => true,
            Noise::Normal { mean, sigma } => mean.is_finite() && *sigma >= 0.0,
            Noise::Exponential { mean } => *mean > 0.0,
            Noise::Lognormal { mu, sigma } => mu.is_finite() && *sigma >= 0.0,
            Noise::Mixture { components } => {
                !components.is_empty()
                    && components
                        .iter()
                        .all(|c| c.weight > 0.0 && c.mean.is_finite() && c.sigma >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid noise spec {self:?}")))
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Noise::None)
    }

    /// One raw draw, possibly negative.
    pub fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Noise::None => 0.0,
            Noise::Normal { mean, sigma } => mean + sigma * rng.sample::<f64, _>(StandardNormal),
            Noise::Exponential { mean } => Exp::new(1.0 / mean).expect("validated").sample(rng),
            Noise::Lognormal { mu, sigma } => {
                LogNormal::new(*mu, *sigma).expect("validated").sample(rng)
            }
            Noise::Mixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                let mut u = rng.random::<f64>() * total;
                let mut chosen = components[components.len() - 1];
                for c in components {
                    if u < c.weight {
                        chosen = *c;
                        break;
                    }
                    u -= c.weight;
                }
                chosen.mean + chosen.sigma * rng.sample::<f64, _>(StandardNormal)
            }
        }
    }

    /// A non-negative draw obtained by rejecting negative values, together
    /// with the number of rejected draws.
    pub fn sample_nonneg<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u32) {
        let mut rejected = 0;
        loop {
            let v = self.sample_raw(rng);
            if v >= 0.0 {
                return (v, rejected);
            }
            rejected += 1;
            if rejected >= MAX_RESAMPLES {
                return (0.0, rejected);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_jitter_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = Jitter::ShiftedExponential { mean: 1e-6 };
        let n = 100_000;
        let m: f64 = (0..n).map(|_| j.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - 1e-6).abs() < 0.01e-6, "{m}");
    }

    #[test]
    fn lognormal_jitter_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let j = Jitter::Lognormal { mu: (5e-7f64).ln(), sigma: 0.3 };
        let n = 100_000;
        let m: f64 = (0..n).map(|_| j.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - j.mean()).abs() / j.mean() < 0.01);
    }

    #[test]
    fn mixture_has_weighted_second_peak() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Noise::bimodal();
        let draws: Vec<f64> = (0..10_000).map(|_| noise.sample_nonneg(&mut rng).0).collect();
        let high = draws.iter().filter(|&&d| (d - 5e-5).abs() < 5e-6).count();
        let low = draws.iter().filter(|&&d| (d - 5e-6).abs() < 5e-6).count();
        let dip = draws.iter().filter(|&&d| d > 1.5e-5 && d < 4e-5).count();
        assert!((800..1200).contains(&high), "{high}");
        assert!(low > 8500, "{low}");
        assert_eq!(dip, 0);
    }

    #[test]
    fn negative_draws_are_resampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let noise = Noise::Normal { mean: 0.0, sigma: 1e-6 };
        let mut total = 0;
        for _ in 0..1000 {
            let (v, r) = noise.sample_nonneg(&mut rng);
            assert!(v >= 0.0);
            total += r;
        }
        assert!((800..1200).contains(&total), "{total}");
    }
}
