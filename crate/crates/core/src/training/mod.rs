//! Policy-gradient training of the controller.
//!
//! All objectives are written as losses to minimize. REINFORCE weights each
//! trajectory's log-probability by its advantage over an exponential
//! moving-average baseline; priority queue training maximizes the
//! log-likelihood of the best distinct trajectories seen so far. Both add an
//! entropy bonus over the sampled batch.

mod history;
mod queue;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use history::{RunHistory, TrialRecord, UpdateRecord, MOVING_AVERAGE_WINDOW};
pub use queue::{QueueEntry, TopKQueue};

use crate::autodiff::{adam_step, AdamState, Gradients, Tape, Var};
use crate::controller::{Controller, ControllerConfig};
use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::search_space::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReinforceConfig {
    pub learning_rate: f64,
    pub entropy_coefficient: f64,
    pub baseline_decay: f64,
    pub batch_size: usize,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self { learning_rate: 0.001, entropy_coefficient: 0.1, baseline_decay: 0.95, batch_size: 1 }
    }
}

impl ReinforceConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(self.learning_rate, self.entropy_coefficient, self.batch_size)?;
        check_decay(self.baseline_decay)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PqtConfig {
    pub learning_rate: f64,
    pub entropy_coefficient: f64,
    pub queue_capacity: usize,
    pub batch_size: usize,
    /// Weight of an added REINFORCE term; 0 gives pure queue training.
    pub reinforce_weight: f64,
    /// Baseline decay for the optional REINFORCE term.
    pub baseline_decay: f64,
}

impl Default for PqtConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            entropy_coefficient: 0.8,
            queue_capacity: 10,
            batch_size: 1,
            reinforce_weight: 0.0,
            baseline_decay: 0.95,
        }
    }
}

impl PqtConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(self.learning_rate, self.entropy_coefficient, self.batch_size)?;
        check_decay(self.baseline_decay)?;
        if self.queue_capacity < 1 {
            return Err(Error::Config("queue capacity must be at least 1".into()));
        }
        if self.reinforce_weight.is_nan() || self.reinforce_weight < 0.0 {
            return Err(Error::Config(format!("reinforce weight must be >= 0, got {}", self.reinforce_weight)));
        }
        Ok(())
    }
}

fn check_common(lr: f64, alpha: f64, batch: usize) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("entropy coefficient must be >= 0, got {alpha}")));
    }
    if batch < 1 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    Ok(())
}

fn check_decay(decay: f64) -> Result<()> {
    if !(0.0..1.0).contains(&decay) {
        return Err(Error::Config(format!("baseline decay must lie in [0, 1), got {decay}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Algorithm {
    Reinforce(ReinforceConfig),
    Pqt(PqtConfig),
}

impl Algorithm {
    pub fn batch_size(&self) -> usize {
        match self {
            Algorithm::Reinforce(c) => c.batch_size,
            Algorithm::Pqt(c) => c.batch_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Algorithm::Reinforce(c) => c.validate(),
            Algorithm::Pqt(c) => c.validate(),
        }
    }

    fn queue_capacity(&self) -> usize {
        match self {
            Algorithm::Reinforce(_) => 0,
            Algorithm::Pqt(c) => c.queue_capacity,
        }
    }
}

/// Mutable training state owned by one run.
#[derive(Clone, Debug)]
pub struct TrainState {
    /// Moving average of batch-mean rewards; set by the first batch.
    pub baseline: Option<f64>,
    pub queue: TopKQueue,
    pub adam: AdamState,
    pub trials: usize,
}

impl TrainState {
    pub fn new(controller: &Controller, queue_capacity: usize) -> Self {
        Self { baseline: None, queue: TopKQueue::new(queue_capacity), adam: AdamState::new(controller.params()), trials: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateMetrics {
    pub loss: f64,
    /// Batch mean of total trajectory entropy.
    pub mean_entropy: f64,
    /// Baseline after the update.
    pub baseline: f64,
}

fn check_batch(batch: &[(Trajectory, f64)]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Config("update batch is empty".into()));
    }
    if let Some(&(_, r)) = batch.iter().find(|(_, r)| !(0.0..=1.0).contains(r)) {
        return Err(Error::RewardRange(r));
    }
    Ok(batch.iter().map(|(_, r)| r).sum::<f64>() / batch.len() as f64)
}

/// `-(w / N) sum_i (R_i - b) log p(tau_i)` recorded on `tape`.
fn policy_gradient_terms(
    controller: &Controller,
    tape: &mut Tape<'_>,
    batch: &[(Trajectory, f64)],
    baseline: f64,
    weight: f64,
) -> Result<(Vec<Var>, Vec<Var>)> {
    let n = batch.len() as f64;
    let mut terms = Vec::with_capacity(batch.len());
    let mut entropies = Vec::with_capacity(batch.len());
    for (trajectory, reward) in batch {
        let score = controller.score_on_tape(tape, trajectory)?;
        if weight != 0.0 {
            terms.push(tape.scale(score.log_prob, -weight * (reward - baseline) / n)?);
        }
        entropies.push(score.entropy);
    }
    Ok((terms, entropies))
}

/// Adds `-(alpha / N) sum_i H(tau_i)` to `terms` and returns the mean entropy.
fn entropy_terms(tape: &mut Tape<'_>, entropies: &[Var], alpha: f64, terms: &mut Vec<Var>) -> Result<f64> {
    let n = entropies.len() as f64;
    let mut mean = 0.0;
    for &h in entropies {
        mean += tape.value(h).values()[0] / n;
        terms.push(tape.scale(h, -alpha / n)?);
    }
    Ok(mean)
}

fn loss_and_gradients(tape: &mut Tape<'_>, loss_terms: &[Var]) -> Result<(f64, Gradients)> {
    let loss = tape.add_all(loss_terms)?.expect("non-empty loss");
    Ok((tape.value(loss).values()[0], tape.backward(loss)?))
}

/// One REINFORCE step with entropy bonus and moving-average baseline.
pub fn reinforce_update(
    controller: &mut Controller,
    batch: &[(Trajectory, f64)],
    config: &ReinforceConfig,
    state: &mut TrainState,
) -> Result<UpdateMetrics> {
    config.validate()?;
    let mean_reward = check_batch(batch)?;
    for (trajectory, _) in batch {
        trajectory.check(controller.graph())?;
    }
    let baseline = *state.baseline.get_or_insert(mean_reward);

    let (loss, grads, mean_entropy) = {
        let mut tape = Tape::new(controller.params());
        let (mut terms, entropies) = policy_gradient_terms(controller, &mut tape, batch, baseline, 1.0)?;
        let mean_entropy = entropy_terms(&mut tape, &entropies, config.entropy_coefficient, &mut terms)?;
        let (loss, grads) = loss_and_gradients(&mut tape, &terms)?;
        (loss, grads, mean_entropy)
    };
    adam_step(controller.params_mut(), &grads, config.learning_rate, &mut state.adam)?;

    let updated = config.baseline_decay * baseline + (1.0 - config.baseline_decay) * mean_reward;
    state.baseline = Some(updated);
    state.trials += batch.len();
    Ok(UpdateMetrics { loss, mean_entropy, baseline: updated })
}

/// One priority-queue-training step: the queue absorbs `batch`, then the
/// controller ascends the mean log-likelihood of the queue contents.
pub fn pqt_update(
    controller: &mut Controller,
    batch: &[(Trajectory, f64)],
    config: &PqtConfig,
    state: &mut TrainState,
) -> Result<UpdateMetrics> {
    config.validate()?;
    let mean_reward = check_batch(batch)?;
    for (trajectory, _) in batch {
        trajectory.check(controller.graph())?;
    }
    if state.queue.capacity() != config.queue_capacity {
        return Err(Error::Config(format!(
            "queue capacity {} does not match configured {}",
            state.queue.capacity(),
            config.queue_capacity
        )));
    }
    for (trajectory, reward) in batch {
        state.queue.offer(trajectory, *reward);
    }
    let baseline = *state.baseline.get_or_insert(mean_reward);

    let (loss, grads, mean_entropy) = {
        let mut tape = Tape::new(controller.params());
        let (mut terms, entropies) =
            policy_gradient_terms(controller, &mut tape, batch, baseline, config.reinforce_weight)?;
        let q = state.queue.len() as f64;
        for entry in state.queue.entries() {
            let score = controller.score_on_tape(&mut tape, &entry.trajectory)?;
            terms.push(tape.scale(score.log_prob, -1.0 / q)?);
        }
        let mean_entropy = entropy_terms(&mut tape, &entropies, config.entropy_coefficient, &mut terms)?;
        let (loss, grads) = loss_and_gradients(&mut tape, &terms)?;
        (loss, grads, mean_entropy)
    };
    adam_step(controller.params_mut(), &grads, config.learning_rate, &mut state.adam)?;

    let updated = config.baseline_decay * baseline + (1.0 - config.baseline_decay) * mean_reward;
    state.baseline = Some(updated);
    state.trials += batch.len();
    Ok(UpdateMetrics { loss, mean_entropy, baseline: updated })
}

/// Everything one search run needs besides the environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub controller: ControllerConfig,
    pub trials: usize,
    pub seed: u64,
}

/// Final artifacts of a run.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub history: RunHistory,
    pub controller: Controller,
    pub state: TrainState,
}

/// Sample, reward and update until `config.trials` trajectories have been
/// evaluated. The last batch shrinks if the budget is not a multiple of the
/// batch size.
pub fn run_search(env: &dyn Environment, config: &SearchConfig) -> Result<RunHistory> {
    Ok(run_search_detailed(env, config)?.history)
}

pub fn run_search_detailed(env: &dyn Environment, config: &SearchConfig) -> Result<SearchOutcome> {
    config.algorithm.validate()?;
    let batch_size = config.algorithm.batch_size();
    if config.trials == 0 || config.trials < batch_size {
        return Err(Error::Config(format!(
            "trial budget {} must be at least the batch size {batch_size} and positive",
            config.trials
        )));
    }
    let mut controller = Controller::init(env.graph().clone(), config.controller, config.seed)?;
    let mut state = TrainState::new(&controller, config.algorithm.queue_capacity());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut history = RunHistory::new();

    while history.len() < config.trials {
        let k = batch_size.min(config.trials - history.len());
        let mut batch = Vec::with_capacity(k);
        for _ in 0..k {
            let sample = controller.sample(&mut rng, env.max_steps())?;
            let trial = env.reward(&sample.trajectory)?;
            history.record_trial(trial.reward);
            batch.push((sample.trajectory, trial.reward));
        }
        let metrics = match &config.algorithm {
            Algorithm::Reinforce(c) => reinforce_update(&mut controller, &batch, c, &mut state)?,
            Algorithm::Pqt(c) => pqt_update(&mut controller, &batch, c, &mut state)?,
        };
        history.record_update(UpdateRecord {
            loss: metrics.loss,
            entropy: metrics.mean_entropy,
            baseline: metrics.baseline,
        });
    }
    Ok(SearchOutcome { history, controller, state })
}
