//! Experiment configuration.
//!
//! The file format is flat TOML whose keys mirror the simulation parameter
//! table (`M_tar`, `N_tar`, `F_tar`, `L`, `B`, `sum_C_prime`, `T`, `alpha`,
//! `beta`, `sum_S`, `sum_C`, `lambda`) plus the learning and harness knobs.
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::delivery::LinkBudget;
use crate::demand::Catalog;
use crate::error::{Error, Result};
use crate::factorization::{FitSettings, TlWeights};
use crate::placement::ScoreScope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    GroundTruth,
    Random,
    Cf,
    Tl,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::GroundTruth, Policy::Random, Policy::Cf, Policy::Tl];

    pub fn name(self) -> &'static str {
        match self {
            Policy::GroundTruth => "ground_truth",
            Policy::Random => "random",
            Policy::Cf => "cf",
            Policy::Tl => "tl",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Policy::GroundTruth => "Ground Truth",
            Policy::Random => "Random",
            Policy::Cf => "Collaborative Filtering",
            Policy::Tl => "Transfer Learning",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Grid values are storage ratios `ΣS / (F·L)`.
    Storage,
    Beta,
    Lambda,
    /// Grid values are total backhaul capacities `ΣC` in Mbit/s.
    Backhaul,
    Correspondence,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] =
        [SweepAxis::Storage, SweepAxis::Beta, SweepAxis::Lambda, SweepAxis::Backhaul, SweepAxis::Correspondence];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Storage => "storage",
            SweepAxis::Beta => "beta",
            SweepAxis::Lambda => "lambda",
            SweepAxis::Backhaul => "backhaul",
            SweepAxis::Correspondence => "correspondence",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Storage => "Storage ratio",
            SweepAxis::Beta => "CRP concentration parameter",
            SweepAxis::Lambda => "Traffic intensity (demand/s)",
            SweepAxis::Backhaul => "Total backhaul capacity (Mbit/s)",
            SweepAxis::Correspondence => "Perfect correspondence ratio",
        }
    }

    /// The 13-point grid spanning the varied range of the parameter table.
    pub fn default_grid(self) -> Vec<f64> {
        let (lo, hi) = match self {
            SweepAxis::Storage | SweepAxis::Correspondence => (0.0, 1.0),
            SweepAxis::Beta => (2.0, 100.0),
            SweepAxis::Lambda => (1.0, 3.0),
            SweepAxis::Backhaul => (1.0, 8.0),
        };
        (0..13).map(|i| lo + (hi - lo) * i as f64 / 12.0).collect()
    }

    /// Copy of `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &ExperimentConfig, value: f64) -> ExperimentConfig {
        let mut out = cfg.clone();
        match self {
            SweepAxis::Storage => out.sum_s = value * cfg.f_tar as f64 * cfg.l,
            SweepAxis::Beta => out.beta = value,
            SweepAxis::Lambda => out.lambda = value,
            SweepAxis::Backhaul => out.sum_c = value,
            SweepAxis::Correspondence => out.correspondence_ratio = value,
        }
        out
    }

    /// Value of this axis in `cfg`, in grid units.
    pub fn value(self, cfg: &ExperimentConfig) -> f64 {
        match self {
            SweepAxis::Storage => cfg.sum_s / (cfg.f_tar as f64 * cfg.l),
            SweepAxis::Beta => cfg.beta,
            SweepAxis::Lambda => cfg.lambda,
            SweepAxis::Backhaul => cfg.sum_c,
            SweepAxis::Correspondence => cfg.correspondence_ratio,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sweep axis {s:?}; expected one of storage, beta, lambda, backhaul, correspondence")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreScopeConfig {
    #[default]
    PerStation,
    Global,
}

impl From<ScoreScopeConfig> for ScoreScope {
    fn from(s: ScoreScopeConfig) -> Self {
        match s {
            ScoreScopeConfig::PerStation => ScoreScope::PerStation,
            ScoreScopeConfig::Global => ScoreScope::Global,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of small-cell stations.
    #[serde(rename = "M_tar")]
    pub m_tar: usize,
    /// Number of users.
    #[serde(rename = "N_tar")]
    pub n_tar: usize,
    /// Library size.
    #[serde(rename = "F_tar")]
    pub f_tar: usize,
    /// Content length, Mbit.
    #[serde(rename = "L")]
    pub l: f64,
    /// Bitrate requirement, Mbit/s.
    #[serde(rename = "B")]
    pub b: f64,
    /// Total wireless capacity, Mbit/s.
    #[serde(rename = "sum_C_prime")]
    pub sum_c_prime: f64,
    /// Number of 1 s slots.
    #[serde(rename = "T")]
    pub t: usize,
    /// Zipf exponent.
    pub alpha: f64,
    /// CRP concentration.
    pub beta: f64,
    /// Total storage, Mbit.
    #[serde(rename = "sum_S")]
    pub sum_s: f64,
    /// Total backhaul capacity, Mbit/s.
    #[serde(rename = "sum_C")]
    pub sum_c: f64,
    /// Network-wide request arrivals per slot.
    pub lambda: f64,

    pub policies: Vec<Policy>,
    pub cf_density: f64,
    pub tl_density: f64,
    pub correspondence_ratio: f64,
    pub coherence: f64,
    pub score_scope: ScoreScopeConfig,

    pub crp_rounds: usize,
    /// Source-domain users; defaults to `N_tar`.
    #[serde(rename = "N_D2D")]
    pub n_d2d: Option<usize>,
    /// Source contents without history.
    #[serde(rename = "F_0")]
    pub f_0: usize,

    pub rank: usize,
    pub mu: f64,
    pub alpha_source: f64,
    pub alpha_target: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub init_scale: f64,

    pub realizations: usize,
    pub seed: u64,
    pub sweep: Option<SweepAxis>,
    pub grid: Option<Vec<f64>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m_tar: 4,
            n_tar: 32,
            f_tar: 32,
            l: 1.0,
            b: 1.0,
            sum_c_prime: 32.0,
            t: 128,
            alpha: 2.0,
            beta: 2.0,
            sum_s: 6.0,
            sum_c: 1.0,
            lambda: 1.0,
            policies: Policy::ALL.to_vec(),
            cf_density: 0.04,
            tl_density: 0.12,
            correspondence_ratio: 1.0,
            coherence: 0.9,
            score_scope: ScoreScopeConfig::PerStation,
            crp_rounds: 8,
            n_d2d: None,
            f_0: 0,
            rank: 8,
            mu: 0.1,
            alpha_source: 1.0,
            alpha_target: 1.0,
            learning_rate: 0.02,
            epochs: 500,
            init_scale: 0.05,
            realizations: 1000,
            seed: 0,
            sweep: None,
            grid: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => Error::Config(format!("{}: {other}", path.display())),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m_tar == 0 || self.n_tar == 0 || self.f_tar == 0 || self.t == 0 {
            return fail("M_tar, N_tar, F_tar and T must be positive".into());
        }
        for (name, v) in [("L", self.l), ("B", self.b), ("sum_C_prime", self.sum_c_prime), ("sum_C", self.sum_c), ("lambda", self.lambda), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.sum_s >= 0.0 && self.sum_s.is_finite()) {
            return fail(format!("sum_S must be non-negative, got {}", self.sum_s));
        }
        if self.sum_c >= self.sum_c_prime {
            return fail("total backhaul capacity must be below total wireless capacity".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be non-negative, got {}", self.alpha));
        }
        for (name, v) in [("cf_density", self.cf_density), ("tl_density", self.tl_density)] {
            if !(v > 0.0 && v <= 1.0) {
                return fail(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        for (name, v) in [("correspondence_ratio", self.correspondence_ratio), ("coherence", self.coherence)] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.policies.is_empty() {
            return fail("at least one policy is required".into());
        }
        if self.crp_rounds == 0 || self.n_d2d == Some(0) {
            return fail("crp_rounds and N_D2D must be positive".into());
        }
        if self.rank == 0 || self.rank > self.n_tar.min(self.f_tar) {
            return fail(format!("rank must lie in 1..={}", self.n_tar.min(self.f_tar)));
        }
        for (name, v) in [("mu", self.mu), ("alpha_source", self.alpha_source), ("alpha_target", self.alpha_target), ("init_scale", self.init_scale)] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.alpha_target == 0.0 {
            return fail("alpha_target must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning_rate must be positive".into());
        }
        if self.realizations == 0 {
            return fail("realizations must be positive".into());
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
                return fail("grid must be a non-empty list of finite values".into());
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return fail("grid must be strictly increasing".into());
            }
        }
        Ok(())
    }

    /// Policies in canonical order, duplicates removed.
    pub fn policy_order(&self) -> Vec<Policy> {
        Policy::ALL.into_iter().filter(|p| self.policies.contains(p)).collect()
    }

    pub fn n_d2d(&self) -> usize {
        self.n_d2d.unwrap_or(self.n_tar)
    }

    pub fn catalog(&self) -> Result<Catalog<f64>> {
        Catalog::uniform(self.f_tar, self.l, self.b)
    }

    /// Total storage split equally over the stations.
    pub fn storage_budgets(&self) -> Vec<f64> {
        vec![self.sum_s / self.m_tar as f64; self.m_tar]
    }

    pub fn links(&self) -> Result<LinkBudget<f64>> {
        LinkBudget::split(self.sum_c, self.sum_c_prime, self.m_tar)
    }

    pub fn fit_settings(&self) -> FitSettings<f64> {
        FitSettings { learning_rate: self.learning_rate, epochs: self.epochs, init_scale: self.init_scale }
    }

    pub fn tl_weights(&self) -> TlWeights<f64> {
        TlWeights { alpha_source: self.alpha_source, alpha_target: self.alpha_target, mu: self.mu }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!((cfg.m_tar, cfg.n_tar, cfg.f_tar, cfg.t), (4, 32, 32, 128));
        assert_eq!((cfg.l, cfg.b, cfg.sum_c_prime), (1.0, 1.0, 32.0));
        assert_eq!((cfg.alpha, cfg.beta, cfg.sum_s, cfg.sum_c, cfg.lambda), (2.0, 2.0, 6.0, 1.0, 1.0));
        assert_eq!(cfg.realizations, 1000);
        assert_eq!(cfg.storage_budgets(), vec![1.5; 4]);
        let links = cfg.links().unwrap();
        assert_eq!((links.backhaul(0), links.wireless(0)), (0.25, 8.0));
    }

    #[test]
    fn parses_table_names() {
        let cfg = ExperimentConfig::from_toml("M_tar = 2\nsum_S = 12.0\nlambda = 2.5\npolicies = [\"tl\", \"cf\"]\n").unwrap();
        assert_eq!(cfg.m_tar, 2);
        assert_eq!(cfg.sum_s, 12.0);
        assert_eq!(cfg.lambda, 2.5);
        assert_eq!(cfg.policy_order(), vec![Policy::Cf, Policy::Tl]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::from_toml("storage = 3\n").unwrap_err().is_config());
        assert!(ExperimentConfig::from_toml("sum_C = 40.0\n").is_err());
        assert!(ExperimentConfig::from_toml("cf_density = 0.0\n").is_err());
        assert!(ExperimentConfig::from_toml("rank = 33\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig { sweep: Some(SweepAxis::Beta), grid: Some(vec![2.0, 50.0]), ..Default::default() };
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn axis_application() {
        let cfg = ExperimentConfig::default();
        let s = SweepAxis::Storage.apply(&cfg, 0.5);
        assert_eq!(s.sum_s, 16.0);
        assert_eq!(SweepAxis::Storage.value(&s), 0.5);
        assert_eq!(SweepAxis::Beta.default_grid().last(), Some(&100.0));
        assert_eq!(SweepAxis::Lambda.default_grid().len(), 13);
        assert!("bandwidth".parse::<SweepAxis>().is_err());
    }
}
