//! Toy reward environments over the built-in search spaces.
//!
//! Each environment owns the graph it rewards, decodes walks into the
//! decision record they encode, and maps that record to a reward in `[0, 1]`.
//! Truncated walks always score 0.

mod select_optimizer;
mod stack_layers;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use select_optimizer::{select_optimizer_raw, select_optimizer_reward, SelectOptimizerEnv, TARGET_VALUE};
pub use stack_layers::{stack_layers_raw, stack_layers_reward, StackLayersEnv};

use crate::error::Result;
use crate::search_space::{SearchGraph, Trajectory, HYPERPARAMETERS_PER_BRANCH};

/// What a walk encodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decoded {
    Layers { n: usize },
    Optimizer { branch: usize, values: [i64; HYPERPARAMETERS_PER_BRANCH] },
    /// A walk cut off before it encoded a complete record.
    Incomplete,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardedTrial {
    pub trajectory: Trajectory,
    pub decoded: Decoded,
    /// Unnormalized reward; `None` for truncated walks.
    pub raw_reward: Option<f64>,
    pub reward: f64,
}

pub trait Environment: Send + Sync {
    fn name(&self) -> &'static str;

    fn graph(&self) -> &Arc<SearchGraph>;

    /// Sampling cap passed to the controller.
    fn max_steps(&self) -> usize;

    fn decode(&self, trajectory: &Trajectory) -> Result<Decoded>;

    /// Decodes then scores `trajectory`.
    fn reward(&self, trajectory: &Trajectory) -> Result<RewardedTrial>;
}
