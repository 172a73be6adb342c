use std::path::Path;

use benchlab::clocksync::{OffsetProbe, SyncConfig, SyncMethod};
use benchlab::experiment::ExperimentPlan;
use benchlab::sim::InstanceConfig;
use benchlab::stats::Alternative;
use benchlab::{Error, Result};
use serde::Deserialize;

/// Top-level configuration file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceConfig,
    #[serde(default)]
    pub plan: Option<ExperimentPlan>,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub sync_eval: SyncEvalConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub alternative: Alternative,
    /// Trials for `repro`.
    pub ntrial: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { alternative: Alternative::TwoSided, ntrial: 10 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncEvalConfig {
    pub methods: Vec<SyncMethod>,
    /// `(n_fitpts, n_exchanges)` pairs.
    pub grid: Vec<(usize, usize)>,
    pub seeds: usize,
    pub root: usize,
    /// Horizon after synchronization at which the Pareto error is taken.
    pub horizon: f64,
    /// Drift-over-time probe; omitted from the output when `nsteps` is 0.
    pub probe: OffsetProbe,
    /// Settings not covered by the grid.
    pub base: SyncConfig,
}

impl Default for SyncEvalConfig {
    fn default() -> Self {
        Self {
            methods: SyncMethod::ALL.to_vec(),
            grid: vec![(20, 10), (100, 30), (200, 50)],
            seeds: 5,
            root: 0,
            horizon: 5.0,
            probe: OffsetProbe::default(),
            base: SyncConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        if let Some(plan) = &self.plan {
            plan.validate()?;
            if plan.p != self.instance.p {
                return Err(Error::Config(format!("plan.p = {} but instance.p = {}", plan.p, self.instance.p)));
            }
        }
        if self.report.ntrial < 2 {
            return Err(Error::Config("report.ntrial must be at least 2".into()));
        }
        let se = &self.sync_eval;
        if se.methods.is_empty() {
            return Err(Error::Config("sync_eval.methods is empty".into()));
        }
        if se.grid.is_empty() || se.seeds == 0 {
            return Err(Error::Config("sync_eval needs a non-empty grid and at least one seed".into()));
        }
        if se.root >= self.instance.p {
            return Err(Error::Config(format!("sync_eval.root {} outside 0..{}", se.root, self.instance.p)));
        }
        for &(f, x) in &se.grid {
            SyncConfig { n_fitpts: f, n_exchanges: x, ..se.base }.validate()?;
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<&ExperimentPlan> {
        self.plan.as_ref().ok_or_else(|| Error::Config("configuration has no [plan] section".into()))
    }

    /// Applies a command-line seed to every seeded component.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            if let Some(p) = self.plan.as_mut() {
                p.master_seed = s;
            }
            self.instance.seed = Some(s);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
        [instance]
        p = 4
    "#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(MIN).unwrap();
        assert!(c.plan.is_none());
        assert!(c.sync_eval.grid.contains(&(100, 30)));
        assert_eq!(c.sync_eval.methods.len(), 5);
        assert!(c.plan().is_err());
    }

    #[test]
    fn rejects_bad_sections() {
        assert!(RunConfig::parse(&format!("{MIN}\n[sync_eval]\nmethods = []")).is_err());
        let err = RunConfig::parse(&format!("{MIN}\n[sync_eval]\nmethods = [\"ntp\"]")).unwrap_err().to_string();
        assert!(err.contains("SKaMPI") && err.contains("HCA2"), "{err}");
        let plan = r#"
            [plan]
            p = 8
            n_mpiruns = 1
            msizes = [8]
            funcs = ["bcast"]
            nrep = 5
            scheme = { scheme = "MS1", sync = { kind = "own-barrier" } }
        "#;
        assert!(matches!(RunConfig::parse(&format!("{MIN}{plan}")), Err(Error::Config(_))));
        assert!(RunConfig::parse(&format!("{MIN}{}", plan.replace("p = 8", "p = 4"))).is_ok());
    }

    #[test]
    fn seed_override() {
        let c = RunConfig::parse(MIN).unwrap().with_seed(Some(9));
        assert_eq!(c.instance.seed, Some(9));
    }
}
