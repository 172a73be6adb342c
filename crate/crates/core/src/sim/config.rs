use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::clock::LocalClock;
use super::collective::{CollectiveModel, ExitSkew, Rounds};
use super::dist::{Jitter, Noise};
use super::engine::SimInstance;
use super::network::{LinkOverride, NetworkModel};
use crate::seed::{self, streams};
use crate::{Error, Result};

/// Fixed clock parameters for one rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockParams {
    pub offset0: f64,
    pub skew: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockConfig {
    /// Initial offsets are drawn uniformly from `[-offset_spread, offset_spread]`.
    pub offset_spread: f64,
    /// Skews are drawn uniformly from `[-skew_spread, skew_spread]`.
    pub skew_spread: f64,
    pub read_noise_sigma: f64,
    pub granularity: f64,
    /// Program start times are drawn uniformly from `[0, launch_stagger]`.
    pub launch_stagger: f64,
    /// Explicit per-rank parameters; overrides the spreads when non-empty.
    pub explicit: Vec<ClockParams>,
}

impl Default for ClockConfig {
    fn default() -> Self {
        Self {
            offset_spread: 1.0,
            skew_spread: 7e-6,
            read_noise_sigma: 1e-8,
            granularity: 1e-9,
            launch_stagger: 0.0,
            explicit: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub base_latency: f64,
    pub asymmetry: f64,
    pub jitter: Jitter,
    pub links: Vec<LinkOverride>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            base_latency: 1.5e-6,
            asymmetry: 0.0,
            jitter: Jitter::ShiftedExponential { mean: 3e-8 },
            links: Vec::new(),
        }
    }
}

/// Variation between simulated `mpirun` instances.
///
/// When enabled, every instance re-samples its clocks from its own seed and
/// scales network latencies and collective costs by factors drawn uniformly
/// from `1 ± spread`. When disabled, clocks come from the configuration seed
/// and all factors are one, so instances differ only in their noise draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetweenRunConfig {
    pub enabled: bool,
    pub latency_spread: f64,
    /// Spread of the collectives' start-up cost `alpha`.
    pub collective_spread: f64,
    /// Spread of the collectives' per-byte cost `beta`.
    pub bandwidth_spread: f64,
}

impl Default for BetweenRunConfig {
    fn default() -> Self {
        Self { enabled: true, latency_spread: 0.05, collective_spread: 0.12, bandwidth_spread: 0.02 }
    }
}

/// Schema of the instance configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub p: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub clock: ClockConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub between_run: BetweenRunConfig,
    /// Entries override or extend [`default_collectives`].
    #[serde(default = "default_collectives", deserialize_with = "over_defaults")]
    pub collective: BTreeMap<String, CollectiveModel>,
    #[serde(default)]
    pub trace: bool,
}

fn over_defaults<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<String, CollectiveModel>, D::Error> {
    let mut m = default_collectives();
    m.extend(BTreeMap::<String, CollectiveModel>::deserialize(d)?);
    Ok(m)
}

/// Built-in library: `bcast`, `allreduce`, `alltoall` and `barrier`.
pub fn default_collectives() -> BTreeMap<String, CollectiveModel> {
    let mut m = BTreeMap::new();
    m.insert(
        "bcast".into(),
        CollectiveModel {
            alpha: 4e-6,
            beta: 1e-10,
            rounds: Rounds::Log2,
            noise: Noise::Exponential { mean: 5e-7 },
            exit_skew: ExitSkew::RankLinear { max: 1e-6, sigma: 2e-7 },
            pipeline_discount: 1.0,
        },
    );
    m.insert(
        "allreduce".into(),
        CollectiveModel {
            alpha: 6e-6,
            beta: 2e-10,
            rounds: Rounds::Log2,
            noise: Noise::Exponential { mean: 8e-7 },
            exit_skew: ExitSkew::Normal { mean: 2e-7, sigma: 2e-7 },
            pipeline_discount: 1.0,
        },
    );
    m.insert(
        "alltoall".into(),
        CollectiveModel {
            alpha: 1e-5,
            beta: 4e-10,
            rounds: Rounds::Linear,
            noise: Noise::bimodal(),
            exit_skew: ExitSkew::Normal { mean: 5e-7, sigma: 5e-7 },
            pipeline_discount: 1.0,
        },
    );
    m.insert(
        "barrier".into(),
        CollectiveModel {
            alpha: 3e-6,
            beta: 0.0,
            rounds: Rounds::Log2,
            noise: Noise::Exponential { mean: 3e-7 },
            exit_skew: ExitSkew::RankLinear { max: 2e-6, sigma: 5e-7 },
            pipeline_discount: 1.0,
        },
    );
    m
}

impl InstanceConfig {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            seed: None,
            clock: ClockConfig::default(),
            network: NetworkConfig::default(),
            between_run: BetweenRunConfig::default(),
            collective: default_collectives(),
            trace: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Turns off every source of randomness: read noise, jitter, collective
    /// noise and exit skew, and between-run variation.
    pub fn noiseless(mut self) -> Self {
        self.clock.read_noise_sigma = 0.0;
        self.network.jitter = Jitter::Deterministic;
        self.between_run.enabled = false;
        for m in self.collective.values_mut() {
            m.noise = Noise::None;
            m.exit_skew = ExitSkew::None;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("p must be positive".into()));
        }
        let c = &self.clock;
        if !(c.offset_spread >= 0.0) || !(c.skew_spread >= 0.0 && c.skew_spread < 1e-3) {
            return Err(Error::Config("clock spreads must be >= 0 and skew spread < 1e-3".into()));
        }
        if !(c.launch_stagger >= 0.0) {
            return Err(Error::Config("launch stagger must be >= 0".into()));
        }
        if !c.explicit.is_empty() && c.explicit.len() != self.p {
            return Err(Error::Config(format!(
                "{} explicit clocks for p = {}",
                c.explicit.len(),
                self.p
            )));
        }
        for l in &self.network.links {
            if l.a >= self.p || l.b >= self.p {
                return Err(Error::Config(format!("link {} -> {} outside 0..{}", l.a, l.b, self.p)));
            }
        }
        let b = &self.between_run;
        if ![b.latency_spread, b.collective_spread, b.bandwidth_spread].iter().all(|s| (0.0..1.0).contains(s)) {
            return Err(Error::Config("between-run spreads must lie in [0, 1)".into()));
        }
        self.network_model(1.0).validate()?;
        for (name, m) in &self.collective {
            m.validate().map_err(|e| Error::Config(format!("collective {name}: {e}")))?;
        }
        LocalClock::new(0.0, 0.0, c.read_noise_sigma, c.granularity)?;
        Ok(())
    }

    fn network_model(&self, scale: f64) -> NetworkModel {
        NetworkModel {
            base_latency: self.network.base_latency,
            asymmetry: self.network.asymmetry,
            jitter: self.network.jitter.clone(),
            links: self.network.links.clone(),
            scale,
        }
    }

    /// Seed used when no instance seed is supplied.
    pub fn base_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Materializes one instance.
    pub fn instantiate(&self, seed: u64) -> Result<SimInstance> {
        self.validate()?;
        let c = &self.clock;
        let br = &self.between_run;
        let clock_seed = if br.enabled { seed } else { self.base_seed() };
        let mut rng = seed::rng(clock_seed, streams::CLOCKS);
        let uniform = |rng: &mut rand_chacha::ChaCha8Rng, s: f64| {
            if s > 0.0 {
                rng.random_range(-s..=s)
            } else {
                0.0
            }
        };
        let mut clocks = Vec::with_capacity(self.p);
        for r in 0..self.p {
            let (offset0, skew) = match c.explicit.get(r) {
                Some(cp) => (cp.offset0, cp.skew),
                None => {
                    let o = uniform(&mut rng, c.offset_spread);
                    (o, uniform(&mut rng, c.skew_spread))
                }
            };
            clocks.push(LocalClock::new(offset0, skew, c.read_noise_sigma, c.granularity)?);
        }

        let mut rng = seed::rng(seed, streams::NETWORK);
        let (lat, coll, bw) = if br.enabled {
            (
                1.0 + uniform(&mut rng, br.latency_spread),
                1.0 + uniform(&mut rng, br.collective_spread),
                1.0 + uniform(&mut rng, br.bandwidth_spread),
            )
        } else {
            (1.0, 1.0, 1.0)
        };
        let mut collectives = self.collective.clone();
        for m in collectives.values_mut() {
            m.alpha *= coll;
            m.beta *= bw;
        }

        let mut inst = SimInstance::new(seed, clocks, self.network_model(lat), collectives)?;
        if c.launch_stagger > 0.0 {
            let mut rng = seed::rng(clock_seed, streams::LAUNCH);
            inst.start_times = (0..self.p).map(|_| rng.random_range(0.0..c.launch_stagger)).collect();
        }
        inst.trace = self.trace;
        Ok(inst)
    }
}
