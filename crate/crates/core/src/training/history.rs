use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Window of the reported moving-average reward.
pub const MOVING_AVERAGE_WINDOW: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// 1-based trial index.
    pub trial: usize,
    pub reward: f64,
    pub best: f64,
    pub moving_average: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub loss: f64,
    pub entropy: f64,
    pub baseline: f64,
}

/// Reward log of one seeded run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub trials: Vec<TrialRecord>,
    pub updates: Vec<UpdateRecord>,
    #[serde(skip)]
    window: VecDeque<f64>,
}

impl RunHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_trial(&mut self, reward: f64) -> TrialRecord {
        let best = self.trials.last().map_or(reward, |r| r.best.max(reward));
        self.window.push_back(reward);
        if self.window.len() > MOVING_AVERAGE_WINDOW {
            self.window.pop_front();
        }
        // Re-summing keeps the average free of accumulated rounding.
        let sum: f64 = self.window.iter().sum();
        let record = TrialRecord {
            trial: self.trials.len() + 1,
            reward,
            best,
            moving_average: sum / self.window.len() as f64,
        };
        self.trials.push(record);
        record
    }

    pub fn record_update(&mut self, record: UpdateRecord) {
        self.updates.push(record);
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn best(&self) -> Option<f64> {
        self.trials.last().map(|r| r.best)
    }

    pub fn best_curve(&self) -> Vec<f64> {
        self.trials.iter().map(|r| r.best).collect()
    }

    /// First 1-based trial whose best-so-far reaches `threshold`.
    pub fn trials_to_threshold(&self, threshold: f64) -> Option<usize> {
        self.trials.iter().find(|r| r.best >= threshold).map(|r| r.trial)
    }
}
