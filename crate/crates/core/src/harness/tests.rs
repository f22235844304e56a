use super::*;
use crate::controller::ControllerConfig;
use crate::search_space::Variant;
use crate::training::Algorithm;

fn history(rewards: &[f64]) -> RunHistory {
    let mut h = RunHistory::new();
    for &r in rewards {
        h.record_trial(r);
    }
    h
}

fn tiny(env: EnvSpec, variant: Variant) -> ExperimentConfig {
    ExperimentConfig {
        trials: 30,
        replicas: 3,
        seed: 5,
        controller: ControllerConfig {
            state_embedding_dim: 4,
            action_embedding_dim: 4,
            aggregator_hidden_dim: 4,
            lstm_hidden_dim: 6,
        },
        ..ExperimentConfig::for_env(env, variant)
    }
}

#[test]
fn format_float_keeps_nine_significant_digits() {
    assert_eq!(format_float(0.0), "0");
    assert_eq!(format_float(1.0), "1");
    assert_eq!(format_float(0.96), "0.96");
    assert_eq!(format_float(1.0 / 3.0), "0.333333333");
    assert_eq!(format_float(123456789.123), "123456789");
    assert_eq!(format_float(-2.0 / 3.0), "-0.666666667");
}

#[test]
fn history_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let h = history(&[0.1, 0.5, 0.25, 1.0 / 3.0]);
    emit_history_csv(&h, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trial,reward,best,moving_avg");
    assert_eq!(text.lines().nth(2).unwrap(), "2,0.5,0.5,0.3");
    let back = read_history_csv(&path).unwrap();
    assert_eq!(back.len(), 4);
    for (a, b) in back.iter().zip(&h.trials) {
        assert_eq!(a.trial, b.trial);
        assert!((a.reward - b.reward).abs() <= 1e-8 * b.reward.abs());
        assert!((a.moving_average - b.moving_average).abs() <= 1e-8 * b.moving_average.abs());
    }
}

#[test]
fn aggregate_csv_round_trips_and_checks_header() {
    let dir = tempfile::tempdir().unwrap();
    let rows = aggregate(&[history(&[0.2, 0.9]), history(&[0.4, 0.1])]).unwrap();
    assert_eq!(rows[0], AggregateRow { trial: 1, mean_best: 0.30000000000000004, min_best: 0.2, max_best: 0.4 });
    assert_eq!(rows[1].max_best, 0.9);
    let path = dir.path().join("a.csv");
    emit_aggregate_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("trial,mean_best,min_best,max_best\n1,0.3,0.2,0.4\n"));
    assert_eq!(read_aggregate_csv(&path).unwrap()[1].max_best, 0.9);
    assert!(read_history_csv(&path).is_err());
}

#[test]
fn aggregate_rejects_ragged_or_empty_input() {
    assert!(aggregate(&[]).is_err());
    assert!(aggregate(&[history(&[0.1]), history(&[0.1, 0.2])]).is_err());
}

#[test]
fn median_of_odd_and_even_counts() {
    assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
    assert!(median(&[]).is_err());
}

#[test]
fn comparison_counts_unsolved_as_budget_plus_one() {
    let fast = vec![history(&[0.5, 1.0, 1.0]), history(&[1.0, 1.0, 1.0]), history(&[0.1, 0.2, 1.0])];
    let slow = vec![history(&[0.5, 0.5, 0.9]), history(&[0.1, 0.2, 1.0]), history(&[0.1, 0.2, 0.3])];
    let r = compare_runs(&fast, &slow, 1.0).unwrap();
    assert_eq!(r.first_trials, vec![Some(2), Some(1), Some(3)]);
    assert_eq!(r.second_trials, vec![None, Some(3), None]);
    assert_eq!(r.first_median, 2.0);
    assert_eq!(r.second_median, 4.0);
    assert_eq!((r.first_solved, r.second_solved), (3, 1));
    assert_eq!(r.dominant, Dominance::First);
    assert!((r.final_gap - (1.0 - (0.9 + 1.0 + 0.3) / 3.0)).abs() < 1e-12);

    let swapped = compare_runs(&slow, &fast, 1.0).unwrap();
    assert_eq!(swapped.dominant, Dominance::Second);
    assert_eq!(compare_runs(&fast, &fast, 1.0).unwrap().dominant, Dominance::Tie);
    assert!(compare_runs(&fast, &[history(&[1.0])], 1.0).is_err());
}

#[test]
fn experiment_writes_files_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(EnvSpec::stack_layers(), Variant::Graph);
    cfg.output = Some(dir.path().to_path_buf());
    let a = run_experiment(&cfg).unwrap();
    assert_eq!(a.histories.len(), 3);
    assert!(a.histories.iter().all(|h| h.len() == 30));
    for i in 0..3 {
        assert!(dir.path().join(replica_file_name(i)).exists());
    }
    assert_eq!(read_aggregate_csv(dir.path().join("aggregate.csv")).unwrap().len(), 30);
    let saved: ExperimentConfig =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(saved, cfg);

    let loaded = load_replicas(dir.path()).unwrap();
    assert_eq!(loaded.len(), 3);

    // Replica i equals a standalone run with seed base + i.
    let single = ExperimentConfig { replicas: 1, seed: 6, output: None, ..cfg.clone() };
    let b = run_experiment(&single).unwrap();
    assert_eq!(b.histories[0].trials, a.histories[1].trials);
}

#[test]
fn select_optimizer_experiment_runs() {
    let cfg = tiny(EnvSpec::select_optimizer(2), Variant::Linear);
    let r = run_experiment(&cfg).unwrap();
    assert!(r.aggregate.iter().all(|row| row.min_best <= row.mean_best && row.mean_best <= row.max_best));
    assert!(r.aggregate.windows(2).all(|w| w[0].mean_best <= w[1].mean_best));
}

#[test]
fn config_defaults_and_parsing() {
    let cfg = ExperimentConfig::for_env(EnvSpec::select_optimizer(4), Variant::Graph);
    assert_eq!(cfg.trials, 2000);
    let Algorithm::Reinforce(r) = cfg.algorithm else { panic!() };
    assert_eq!((r.learning_rate, r.entropy_coefficient), (0.0001, 0.8));
    assert_eq!(EnvSpec::stack_layers().default_threshold(), 1.0);
    assert_eq!(EnvSpec::select_optimizer(2).default_threshold(), 0.99);
    assert!("tree".parse::<EnvSpec>().is_err());
    assert!(algorithm_by_name("ppo", 0.1, 0.1).is_err());

    let text = r#"{"env": {"name": "stack_layers", "layers": 5}, "variant": "linear",
                   "algorithm": {"name": "pqt", "queue_capacity": 3}, "trials": 10, "replicas": 2}"#;
    let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
    assert_eq!(cfg.env, EnvSpec::StackLayers { layers: 5, max_steps: None });
    assert_eq!(cfg.algorithm.batch_size(), 1);
    assert!(cfg.validate().is_ok());
    assert!(ExperimentConfig { replicas: 0, ..cfg }.validate().is_err());
}
