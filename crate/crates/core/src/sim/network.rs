use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist::Jitter;
use crate::{Error, Result};

/// Per-link parameters overriding the network defaults. `a -> b` is the
/// forward direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkOverride {
    pub a: usize,
    pub b: usize,
    pub base_latency: f64,
    #[serde(default)]
    pub asymmetry: f64,
}

/// One-way message latency model.
///
/// A message from `src` to `dst` takes `base + delta + jitter` in the forward
/// direction and `base - delta + jitter` backwards. Without an override the
/// forward direction is from the lower rank to the higher one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub base_latency: f64,
    #[serde(default)]
    pub asymmetry: f64,
    #[serde(default)]
    pub jitter: Jitter,
    #[serde(default)]
    pub links: Vec<LinkOverride>,
    /// Multiplier on every base latency and asymmetry; models between-run
    /// variation.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl NetworkModel {
    pub fn deterministic(base_latency: f64) -> Self {
        Self {
            base_latency,
            asymmetry: 0.0,
            jitter: Jitter::Deterministic,
            links: Vec::new(),
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.jitter.validate()?;
        if !(self.scale > 0.0) {
            return Err(Error::Config(format!("latency scale {} must be > 0", self.scale)));
        }
        let check = |base: f64, delta: f64| {
            if base - delta.abs() > 0.0 && base.is_finite() && delta.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "latency base {base} must exceed |asymmetry| {}",
                    delta.abs()
                )))
            }
        };
        check(self.base_latency, self.asymmetry)?;
        for l in &self.links {
            if l.a == l.b {
                return Err(Error::Config(format!("link override {} -> {} is a self-loop", l.a, l.b)));
            }
            check(l.base_latency, l.asymmetry)?;
        }
        Ok(())
    }

    /// Base latency and signed asymmetry of the directed pair, after scaling.
    pub fn link(&self, src: usize, dst: usize) -> (f64, f64) {
        for l in &self.links {
            if l.a == src && l.b == dst {
                return (l.base_latency * self.scale, l.asymmetry * self.scale);
            }
            if l.b == src && l.a == dst {
                return (l.base_latency * self.scale, -l.asymmetry * self.scale);
            }
        }
        let delta = if src < dst { self.asymmetry } else { -self.asymmetry };
        (self.base_latency * self.scale, delta * self.scale)
    }

    /// Smallest latency the model can produce on the directed pair.
    pub fn min_latency(&self, src: usize, dst: usize) -> f64 {
        let (base, delta) = self.link(src, dst);
        base + delta
    }

    /// Mean latency on the directed pair.
    pub fn mean_latency(&self, src: usize, dst: usize) -> f64 {
        self.min_latency(src, dst) + self.jitter.mean()
    }

    pub fn sample_latency<R: Rng + ?Sized>(&self, src: usize, dst: usize, rng: &mut R) -> Result<f64> {
        if src == dst {
            return Err(Error::SelfMessage(src));
        }
        let (base, delta) = self.link(src, dst);
        Ok(base + delta + self.jitter.sample(rng))
    }
}
