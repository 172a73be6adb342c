use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A drifting, jittery, quantized clock owned by one rank.
///
/// The noiseless reading at true time `t` is `offset0 + (1 + skew) * t`,
/// quantized down to `granularity`. Each query adds Gaussian read noise
/// clipped to four standard deviations, and readings never decrease.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalClock {
    pub offset0: f64,
    pub skew: f64,
    pub read_noise_sigma: f64,
    pub granularity: f64,
    #[serde(skip, default = "neg_inf")]
    last_reading: f64,
    #[serde(skip)]
    last_query: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

impl LocalClock {
    pub fn new(offset0: f64, skew: f64, read_noise_sigma: f64, granularity: f64) -> Result<Self> {
        if !(skew.abs() < 1e-3) {
            return Err(Error::Config(format!("clock skew {skew} outside (-1e-3, 1e-3)")));
        }
        if !(read_noise_sigma >= 0.0) || !read_noise_sigma.is_finite() {
            return Err(Error::Config(format!("read noise sigma {read_noise_sigma} must be >= 0")));
        }
        if !(granularity > 0.0) || !granularity.is_finite() {
            return Err(Error::Config(format!("granularity {granularity} must be > 0")));
        }
        if !offset0.is_finite() {
            return Err(Error::Config("clock offset must be finite".into()));
        }
        Ok(Self {
            offset0,
            skew,
            read_noise_sigma,
            granularity,
            last_reading: f64::NEG_INFINITY,
            last_query: 0.0,
        })
    }

    /// A perfect clock: no offset, skew or noise, 1 ns ticks.
    pub fn perfect() -> Self {
        Self::new(0.0, 0.0, 0.0, 1e-9).expect("valid parameters")
    }

    /// Noiseless, unquantized reading. Does not touch clock state.
    pub fn ideal(&self, t: f64) -> f64 {
        self.offset0 + (1.0 + self.skew) * t
    }

    /// True time at which the noiseless reading equals `local`.
    pub fn true_time_of(&self, local: f64) -> f64 {
        (local - self.offset0) / (1.0 + self.skew)
    }

    pub fn last_reading(&self) -> Option<f64> {
        self.last_reading.is_finite().then_some(self.last_reading)
    }

    /// Reads the clock at true time `t`.
    pub fn read<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        if t < self.last_query {
            return Err(Error::NonMonotoneQuery {
                requested: t,
                previous: self.last_query,
            });
        }
        self.last_query = t;
        let mut value = self.ideal(t);
        if self.read_noise_sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            value += z.clamp(-4.0, 4.0) * self.read_noise_sigma;
        }
        let value = quantize_down(value, self.granularity).max(self.last_reading);
        self.last_reading = value;
        Ok(value)
    }
}

/// Floors `v` to a multiple of `g`, treating values within rounding error of
/// a tick boundary as lying on it.
pub(crate) fn quantize_down(v: f64, g: f64) -> f64 {
    let x = v / g;
    let r = x.round();
    let tol = 1e-9f64.max(8.0 * f64::EPSILON * x.abs());
    let ticks = if (x - r).abs() <= tol { r } else { x.floor() };
    ticks * g
}
