use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidencePolicy;
use crate::error::{Error, Result};
use crate::reward::RewardModel;
use crate::se;
use crate::stableopt::{self, RecommendRule, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Se,
    Stableopt,
    Naive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Se, Algorithm::Stableopt, Algorithm::Naive];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Se => "se",
            Algorithm::Stableopt => "stableopt",
            Algorithm::Naive => "naive",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown algorithm '{s}' (se, stableopt, naive)")))
    }
}

/// Confidence policy as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicyConfig {
    Lil { epsilon: f64, delta: f64 },
    Practical { c: f64 },
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig::Practical { c: 1.0 }
    }
}

impl PolicyConfig {
    /// Policy for an instance with `n` arms.
    pub fn build(&self, n: usize) -> Result<ConfidencePolicy> {
        match *self {
            PolicyConfig::Lil { epsilon, delta } => ConfidencePolicy::lil(epsilon, delta, n),
            PolicyConfig::Practical { c } => ConfidencePolicy::practical(c),
        }
    }
}

fn default_n() -> usize {
    100
}

fn default_groups() -> usize {
    10
}

fn default_count() -> u32 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceSource {
    /// Instance files; relative paths in a config file are resolved against
    /// the file's directory.
    Files { paths: Vec<PathBuf> },
    /// `count` generated instances per gap.
    Generated {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_groups")]
        groups: usize,
        gaps: Vec<f64>,
        #[serde(default = "default_count")]
        count: u32,
        #[serde(default)]
        reward_model: RewardModel,
    },
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Se]
}

fn default_eta() -> f64 {
    stableopt::DEFAULT_ETA
}

fn default_budget() -> u64 {
    se::DEFAULT_BUDGET
}

fn default_trials() -> u32 {
    10
}

fn default_stride() -> u64 {
    100
}

/// One experiment grid: every algorithm on every instance, `trials` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub policy: PolicyConfig,
    /// Stopping tolerance of StableOpt and the naive baseline.
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Fixed number of rounds. StableOpt runs exactly this many; the other
    /// algorithms treat it as a pull budget.
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub recommend: RecommendRule,
    pub instances: InstanceSource,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    /// Regret trajectory stride in pulls.
    #[serde(default = "default_stride")]
    pub stride: u64,
    /// Record regret trajectories.
    #[serde(default)]
    pub trajectories: bool,
    /// Record per-epoch elimination snapshots.
    #[serde(default)]
    pub trace: bool,
    /// Execution-only settings below are not echoed into outputs.
    #[serde(default, skip_serializing)]
    pub serial: bool,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(instances: InstanceSource) -> Self {
        Self {
            algorithms: default_algorithms(),
            policy: PolicyConfig::default(),
            eta: default_eta(),
            budget: default_budget(),
            horizon: None,
            recommend: RecommendRule::default(),
            instances,
            trials: default_trials(),
            seed: 0,
            stride: default_stride(),
            trajectories: false,
            trace: false,
            serial: false,
            out: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a TOML config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let InstanceSource::Files { paths } = &mut config.instances {
            let base = path.parent().unwrap_or(Path::new(""));
            for p in paths.iter_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Parameter checks that do not need the instances.
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::config("no algorithms selected"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.stride == 0 {
            return Err(Error::config("stride must be at least 1"));
        }
        if self.budget == 0 {
            return Err(Error::config("budget must be at least 1"));
        }
        if self.horizon == Some(0) {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::config(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        self.policy.build(1)?;
        match &self.instances {
            InstanceSource::Files { paths } if paths.is_empty() => {
                Err(Error::config("no instance files given"))
            }
            InstanceSource::Generated { gaps, count, .. } => {
                if gaps.is_empty() {
                    return Err(Error::config("no gaps given for generated instances"));
                }
                if *count == 0 {
                    return Err(Error::config("instance count must be at least 1"));
                }
                Ok(())
            }
            InstanceSource::Files { .. } => Ok(()),
        }
    }

    /// Pull budget applied to SE and the naive baseline.
    pub fn pull_budget(&self) -> u64 {
        self.horizon.map_or(self.budget, |h| h.min(self.budget))
    }

    pub fn stop_rule(&self) -> StopRule {
        match self.horizon {
            Some(h) => StopRule::Horizon(h),
            None => StopRule::Tolerance {
                eta: self.eta,
                budget: self.budget,
            },
        }
    }

    /// Canonical JSON echo written into every output header.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}
