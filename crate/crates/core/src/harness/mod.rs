//! Replicated experiments, CSV output and run comparison.

mod config;
mod csv_io;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{algorithm_by_name, EnvSpec, ExperimentConfig};
pub use csv_io::{
    emit_aggregate_csv, emit_history_csv, format_float, read_aggregate_csv, read_history_csv, AGGREGATE_HEADER,
    HISTORY_HEADER,
};

use crate::error::{Error, Result};
use crate::training::{run_search, RunHistory, SearchConfig};

/// Best-so-far statistics across replicas at one trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub trial: usize,
    pub mean_best: f64,
    pub min_best: f64,
    pub max_best: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// One history per replica, in replica order.
    pub histories: Vec<RunHistory>,
    pub aggregate: Vec<AggregateRow>,
}

pub fn aggregate(histories: &[RunHistory]) -> Result<Vec<AggregateRow>> {
    let first = histories.first().ok_or(Error::EmptyInput { op: "aggregate" })?;
    let n = first.len();
    if histories.iter().any(|h| h.len() != n) {
        return Err(Error::Config("replica histories differ in length".into()));
    }
    Ok((0..n)
        .map(|i| {
            let bests = histories.iter().map(|h| h.trials[i].best);
            let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
            for b in bests {
                sum += b;
                min = min.min(b);
                max = max.max(b);
            }
            AggregateRow { trial: i + 1, mean_best: sum / histories.len() as f64, min_best: min, max_best: max }
        })
        .collect())
}

/// Runs every replica (in parallel, results kept in replica order) and
/// writes CSV files when `config.output` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let env = config.env.build(config.variant)?;
    let histories = (0..config.replicas)
        .into_par_iter()
        .map(|i| {
            let search = SearchConfig {
                algorithm: config.algorithm,
                controller: config.controller,
                trials: config.trials,
                seed: config.replica_seed(i),
            };
            run_search(env.as_ref(), &search)
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&histories)?;
    let result = ExperimentResult { config: config.clone(), histories, aggregate };
    if let Some(dir) = &config.output {
        write_experiment(&result, dir)?;
    }
    Ok(result)
}

pub fn replica_file_name(replica: usize) -> String {
    format!("replica_{replica:02}.csv")
}

/// Writes `replica_NN.csv`, `aggregate.csv` and `config.json` into `dir`.
pub fn write_experiment(result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, h) in result.histories.iter().enumerate() {
        emit_history_csv(h, dir.join(replica_file_name(i)))?;
    }
    emit_aggregate_csv(&result.aggregate, dir.join("aggregate.csv"))?;
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&result.config)?).map_err(|e| Error::io(&path, e))
}

/// Reads back the replica files of a directory written by [`write_experiment`].
pub fn load_replicas(dir: &Path) -> Result<Vec<RunHistory>> {
    let mut out = Vec::new();
    loop {
        let path = dir.join(replica_file_name(out.len()));
        if !path.exists() {
            break;
        }
        let mut h = RunHistory::new();
        for r in read_history_csv(&path)? {
            h.record_trial(r.reward);
        }
        out.push(h);
    }
    if out.is_empty() {
        return Err(Error::Config(format!("no replica files in {}", dir.display())));
    }
    Ok(out)
}

/// Median with the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput { op: "median" });
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    First,
    Second,
    Tie,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub threshold: f64,
    pub trials: usize,
    /// Per-replica first trial with best >= threshold; `None` if never.
    pub first_trials: Vec<Option<usize>>,
    pub second_trials: Vec<Option<usize>>,
    /// Medians with unsolved replicas counted as `trials + 1`.
    pub first_median: f64,
    pub second_median: f64,
    pub first_solved: usize,
    pub second_solved: usize,
    /// Lower median wins.
    pub dominant: Dominance,
    pub first_final_mean_best: f64,
    pub second_final_mean_best: f64,
    /// First minus second final mean best reward.
    pub final_gap: f64,
}

pub fn compare_runs(first: &[RunHistory], second: &[RunHistory], threshold: f64) -> Result<ComparisonReport> {
    let trials = first.first().ok_or(Error::EmptyInput { op: "compare_runs" })?.len();
    if first.iter().chain(second).any(|h| h.len() != trials) {
        return Err(Error::Config("compared runs must share one trial budget".into()));
    }
    let a = aggregate(first)?;
    let b = aggregate(second)?;
    let hits = |runs: &[RunHistory]| runs.iter().map(|h| h.trials_to_threshold(threshold)).collect::<Vec<_>>();
    let first_trials = hits(first);
    let second_trials = hits(second);
    let as_cost = |t: &[Option<usize>]| t.iter().map(|x| x.unwrap_or(trials + 1) as f64).collect::<Vec<_>>();
    let first_median = median(&as_cost(&first_trials))?;
    let second_median = median(&as_cost(&second_trials))?;
    let dominant = match first_median.total_cmp(&second_median) {
        std::cmp::Ordering::Less => Dominance::First,
        std::cmp::Ordering::Greater => Dominance::Second,
        std::cmp::Ordering::Equal => Dominance::Tie,
    };
    let first_final_mean_best = a[trials - 1].mean_best;
    let second_final_mean_best = b[trials - 1].mean_best;
    Ok(ComparisonReport {
        threshold,
        trials,
        first_solved: first_trials.iter().flatten().count(),
        second_solved: second_trials.iter().flatten().count(),
        first_trials,
        second_trials,
        first_median,
        second_median,
        dominant,
        first_final_mean_best,
        second_final_mean_best,
        final_gap: first_final_mean_best - second_final_mean_best,
    })
}

#[cfg(test)]
mod tests;
