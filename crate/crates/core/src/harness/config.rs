use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::environments::{Environment, SelectOptimizerEnv, StackLayersEnv, TARGET_VALUE};
use crate::error::{Error, Result};
use crate::search_space::{ValueRange, Variant};
use crate::training::{Algorithm, PqtConfig, ReinforceConfig};

/// Environment name plus its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EnvSpec {
    StackLayers {
        #[serde(default = "default_layers")]
        layers: usize,
        #[serde(default)]
        max_steps: Option<usize>,
    },
    SelectOptimizer {
        #[serde(default = "default_branches")]
        branches: usize,
        #[serde(default = "default_value_min")]
        value_min: i64,
        #[serde(default = "default_value_max")]
        value_max: i64,
        #[serde(default = "default_target")]
        target: i64,
    },
}

fn default_layers() -> usize {
    10
}
fn default_branches() -> usize {
    2
}
fn default_value_min() -> i64 {
    1
}
fn default_value_max() -> i64 {
    100
}
fn default_target() -> i64 {
    TARGET_VALUE
}

impl EnvSpec {
    pub fn stack_layers() -> Self {
        EnvSpec::StackLayers { layers: default_layers(), max_steps: None }
    }

    pub fn select_optimizer(branches: usize) -> Self {
        EnvSpec::SelectOptimizer {
            branches,
            value_min: default_value_min(),
            value_max: default_value_max(),
            target: default_target(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::StackLayers { .. } => "stack_layers",
            EnvSpec::SelectOptimizer { .. } => "select_optimizer",
        }
    }

    pub fn build(&self, variant: Variant) -> Result<Box<dyn Environment>> {
        Ok(match *self {
            EnvSpec::StackLayers { layers, max_steps } => Box::new(StackLayersEnv::new(variant, layers, max_steps)?),
            EnvSpec::SelectOptimizer { branches, value_min, value_max, target } => Box::new(
                SelectOptimizerEnv::new(variant, branches, ValueRange::new(value_min, value_max)?, target)?,
            ),
        })
    }

    /// Learning rate and entropy coefficient used for this task.
    pub fn default_hyperparameters(&self) -> (f64, f64) {
        match self {
            EnvSpec::StackLayers { .. } => (0.001, 0.1),
            EnvSpec::SelectOptimizer { .. } => (0.0001, 0.8),
        }
    }

    pub fn default_trials(&self) -> usize {
        match self {
            EnvSpec::StackLayers { .. } => 200,
            EnvSpec::SelectOptimizer { .. } => 2000,
        }
    }

    /// Reward that counts as solved for trials-to-threshold.
    pub fn default_threshold(&self) -> f64 {
        match self {
            EnvSpec::StackLayers { .. } => 1.0,
            EnvSpec::SelectOptimizer { .. } => 0.99,
        }
    }
}

impl FromStr for EnvSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stack_layers" => Ok(Self::stack_layers()),
            "select_optimizer" => Ok(Self::select_optimizer(default_branches())),
            other => Err(Error::Config(format!(
                "unknown environment `{other}` (expected stack_layers|select_optimizer)"
            ))),
        }
    }
}

/// One experiment: a task, an encoding, a trainer and a replica count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub variant: Variant,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub controller: ControllerConfig,
    pub trials: usize,
    pub replicas: usize,
    /// Replica `i` runs with seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    /// Directory receiving `replica_NN.csv` and `aggregate.csv`.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Task defaults: REINFORCE with the task's learning rate and entropy
    /// coefficient, its trial budget, and 10 replicas.
    pub fn for_env(env: EnvSpec, variant: Variant) -> Self {
        let (learning_rate, entropy_coefficient) = env.default_hyperparameters();
        let algorithm =
            Algorithm::Reinforce(ReinforceConfig { learning_rate, entropy_coefficient, ..Default::default() });
        Self {
            trials: env.default_trials(),
            env,
            variant,
            algorithm,
            controller: ControllerConfig::default(),
            replicas: 10,
            seed: 0,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.algorithm.validate()?;
        self.controller.validate()
    }

    pub fn replica_seed(&self, replica: usize) -> u64 {
        self.seed.wrapping_add(replica as u64)
    }
}

/// Name-addressable algorithm choice used by the CLI.
pub fn algorithm_by_name(name: &str, learning_rate: f64, entropy_coefficient: f64) -> Result<Algorithm> {
    match name {
        "reinforce" => Ok(Algorithm::Reinforce(ReinforceConfig {
            learning_rate,
            entropy_coefficient,
            ..Default::default()
        })),
        "pqt" => Ok(Algorithm::Pqt(PqtConfig { learning_rate, entropy_coefficient, ..Default::default() })),
        other => Err(Error::Config(format!("unknown algorithm `{other}` (expected reinforce|pqt)"))),
    }
}
