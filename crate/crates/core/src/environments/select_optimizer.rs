use std::sync::Arc;

use super::{Decoded, Environment, RewardedTrial};
use crate::error::{Error, Result};
use crate::search_space::{
    build_select_optimizer, SearchGraph, Trajectory, ValueRange, Variant, HYPERPARAMETERS_PER_BRANCH,
};

pub const TARGET_VALUE: i64 = 50;

type Values = [i64; HYPERPARAMETERS_PER_BRANCH];

/// Penalty charged for each hyperparameter after the first wrong one: the
/// largest squared deviation the range allows (`50^2` on `[1, 100]`).
fn unresolved_penalty(range: ValueRange, target: i64) -> f64 {
    let dev = (target - range.lo).max(range.hi - target) as f64;
    dev * dev
}

/// `-(p_M - target)^2 - (4 - M) * penalty` where `M` is the first wrong
/// position (1-based); 0 when every value is on target.
pub fn select_optimizer_raw(values: &Values, range: ValueRange, target: i64) -> f64 {
    let penalty = unresolved_penalty(range, target);
    match values.iter().position(|&p| p != target) {
        None => 0.0,
        Some(m) => {
            let d = (values[m] - target) as f64;
            let remaining = (HYPERPARAMETERS_PER_BRANCH - 1 - m) as f64;
            -(d * d) - remaining * penalty
        }
    }
}

/// Raw and normalized reward; normalization is `1 + raw / worst` with
/// `worst = 4 * penalty` (10000 on `[1, 100]`).
pub fn select_optimizer_reward(
    branch: usize,
    values: &Values,
    branches: usize,
    range: ValueRange,
    target: i64,
) -> Result<(f64, f64)> {
    if !(1..=branches).contains(&branch) {
        return Err(Error::Config(format!("branch {branch} outside 1..={branches}")));
    }
    if let Some(&bad) = values.iter().find(|&&v| !range.contains(v)) {
        return Err(Error::ValueRange { value: bad, lo: range.lo, hi: range.hi });
    }
    let raw = select_optimizer_raw(values, range, target);
    let worst = HYPERPARAMETERS_PER_BRANCH as f64 * unresolved_penalty(range, target);
    let normalized = if worst == 0.0 { 1.0 } else { (1.0 + raw / worst).clamp(0.0, 1.0) };
    Ok((raw, normalized))
}

/// Pick one of `B` optimizers, then its four hyperparameters; best when all
/// four equal the target.
#[derive(Clone, Debug)]
pub struct SelectOptimizerEnv {
    branches: usize,
    range: ValueRange,
    variant: Variant,
    target: i64,
    graph: Arc<SearchGraph>,
}

impl SelectOptimizerEnv {
    pub fn new(variant: Variant, branches: usize, range: ValueRange, target: i64) -> Result<Self> {
        if !range.contains(target) {
            return Err(Error::Config(format!("target {target} outside [{}, {}]", range.lo, range.hi)));
        }
        let graph = Arc::new(build_select_optimizer(variant, branches, range)?);
        Ok(Self { branches, range, variant, target, graph })
    }

    /// The `[1, 100]` space with target 50.
    pub fn standard(variant: Variant, branches: usize) -> Result<Self> {
        Self::new(variant, branches, ValueRange { lo: 1, hi: 100 }, TARGET_VALUE)
    }

    pub fn branches(&self) -> usize {
        self.branches
    }

    pub fn range(&self) -> ValueRange {
        self.range
    }

    pub fn target(&self) -> i64 {
        self.target
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Chosen branch (1-based) and its four values. In the linear variant the
    /// other branches' values are ignored.
    pub fn decode_choice(&self, trajectory: &Trajectory) -> Result<(usize, Values)> {
        trajectory.check(&self.graph)?;
        if trajectory.truncated {
            return Err(Error::Trajectory("select-optimizer walks cannot be truncated".into()));
        }
        let g = &self.graph;
        let index = |t: usize| g.action_index(trajectory.steps[t].edge);
        let branch = index(0) + 1;
        let offset = match self.variant {
            Variant::Graph => 1,
            Variant::Linear => 1 + (branch - 1) * HYPERPARAMETERS_PER_BRANCH,
        };
        let mut values = [0; HYPERPARAMETERS_PER_BRANCH];
        for (i, v) in values.iter_mut().enumerate() {
            *v = self.range.value_at(index(offset + i));
        }
        Ok((branch, values))
    }
}

impl Environment for SelectOptimizerEnv {
    fn name(&self) -> &'static str {
        "select_optimizer"
    }

    fn graph(&self) -> &Arc<SearchGraph> {
        &self.graph
    }

    fn max_steps(&self) -> usize {
        match self.variant {
            Variant::Graph => 1 + HYPERPARAMETERS_PER_BRANCH,
            Variant::Linear => 1 + HYPERPARAMETERS_PER_BRANCH * self.branches,
        }
    }

    fn decode(&self, trajectory: &Trajectory) -> Result<Decoded> {
        let (branch, values) = self.decode_choice(trajectory)?;
        Ok(Decoded::Optimizer { branch, values })
    }

    fn reward(&self, trajectory: &Trajectory) -> Result<RewardedTrial> {
        if trajectory.truncated {
            trajectory.check(&self.graph)?;
            return Ok(RewardedTrial {
                trajectory: trajectory.clone(),
                decoded: Decoded::Incomplete,
                raw_reward: None,
                reward: 0.0,
            });
        }
        let (branch, values) = self.decode_choice(trajectory)?;
        let (raw, reward) = select_optimizer_reward(branch, &values, self.branches, self.range, self.target)?;
        Ok(RewardedTrial {
            trajectory: trajectory.clone(),
            decoded: Decoded::Optimizer { branch, values },
            raw_reward: Some(raw),
            reward,
        })
    }
}
