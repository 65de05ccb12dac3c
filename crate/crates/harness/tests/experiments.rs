use rltestbench_core::agents::Algorithm;
use rltestbench_core::ciprio::RankingModel;
use rltestbench_core::domain::{Cycle, TestCaseRecord};
use rltestbench_core::metrics::MetricKind;
use rltestbench_harness::ci::run_ciprio_experiment;
use rltestbench_harness::config::{ExperimentConfig, MazeConfig, Task};
use rltestbench_harness::game::run_game_experiment;
use rltestbench_harness::records::metric_fingerprint;
use rltestbench_harness::report::export_plot_data;

fn small_game(alg: Algorithm, steps: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        task: Some(Task::Blockmaze),
        seed: 5,
        repetitions: Some(2),
        total_steps: steps,
        checkpoint_interval: 100,
        maze: MazeConfig { width: 6, height: 6, bug_count: 4, step_cap: 60, ..MazeConfig::default() },
        ..ExperimentConfig::default()
    };
    c.agent.algorithm = alg;
    c.agent.hidden = vec![16, 16];
    c.agent.ppo.rollout_len = 64;
    c.agent.ppo.minibatch_size = 16;
    c.agent.dqn.learning_starts = 50;
    c
}

fn cycle(id: u64, verdicts: &[u8]) -> Cycle {
    let tests = verdicts
        .iter()
        .enumerate()
        .map(|(i, &v)| TestCaseRecord {
            test_id: format!("t{i}"),
            cycle_id: id,
            verdict: v,
            duration: (i * 7 % 5 + 1) as f64,
            age: id,
            verdict_history: vec![0, v, 0, 1],
            enriched: None,
        })
        .collect();
    Cycle::new(id, tests).unwrap()
}

fn small_ci(alg: Algorithm, model: RankingModel) -> ExperimentConfig {
    let mut c = ExperimentConfig { task: Some(Task::Ciprio), seed: 3, ..ExperimentConfig::default() };
    c.agent.algorithm = alg;
    c.agent.hidden = vec![8];
    c.ciprio.model = model;
    c.ciprio.dataset = Some("unused.csv".into());
    c.ciprio.step_cap = 300;
    c.ciprio.patience = 5;
    c
}

#[test]
fn zero_steps_gives_single_point_curves() {
    let records = run_game_experiment(&small_game(Algorithm::Dqn, 0)).unwrap();
    assert_eq!(records.len(), 2 * 3);
    assert!(records.iter().all(|r| r.index == 0));
    assert!(records.iter().filter(|r| r.metric == MetricKind::Bugs).all(|r| r.value == 0.0));
    let plot = &export_plot_data(&records, MetricKind::Bugs)["dqn"];
    assert_eq!(plot.lines().count(), 2);
}

#[test]
fn game_records_repeat_exactly() {
    for alg in [Algorithm::Dqn, Algorithm::A2c, Algorithm::Ppo] {
        let c = small_game(alg, 400);
        let a = run_game_experiment(&c).unwrap();
        let b = run_game_experiment(&c).unwrap();
        assert_eq!(metric_fingerprint(&a).unwrap(), metric_fingerprint(&b).unwrap(), "{alg}");
        assert_eq!(a.len(), 2 * 5 * 3);
    }
}

#[test]
fn repetitions_use_distinct_seeds_and_mazes() {
    let records = run_game_experiment(&small_game(Algorithm::Ppo, 200)).unwrap();
    let seeds: std::collections::BTreeSet<u64> = records.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 2);
}

#[test]
fn coverage_and_bugs_never_decrease() {
    let records = run_game_experiment(&small_game(Algorithm::A2c, 500)).unwrap();
    for metric in [MetricKind::Bugs, MetricKind::StateCoverage] {
        for rep in 0..2 {
            let v: Vec<f64> =
                records.iter().filter(|r| r.metric == metric && r.repetition == rep).map(|r| r.value).collect();
            assert!(v.windows(2).all(|w| w[0] <= w[1]), "{metric} {v:?}");
        }
    }
}

#[test]
fn plot_means_match_recomputation() {
    let records = run_game_experiment(&small_game(Algorithm::Dqn, 300)).unwrap();
    let plot = &export_plot_data(&records, MetricKind::Reward)["dqn"];
    for line in plot.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let vals: Vec<f64> = records
            .iter()
            .filter(|r| r.metric == MetricKind::Reward && r.index == f[0] as u64)
            .map(|r| r.value)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - f[1]).abs() <= 1e-12);
    }
}

#[test]
fn two_cycles_give_one_record() {
    let cycles = vec![cycle(1, &[0, 1, 0, 0, 0, 1]), cycle(2, &[0, 0, 1, 0, 0, 0])];
    let out = run_ciprio_experiment(&small_ci(Algorithm::Dqn, RankingModel::Pairwise), &cycles).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].metric, MetricKind::Apfd);
    assert_eq!(out.records[0].index, 2);
    assert_eq!(out.evaluations[0].len(), 1);
}

#[test]
fn all_pass_history_uses_nrpa_only() {
    let cycles: Vec<Cycle> = (1..=4).map(|i| cycle(i, &[0; 7])).collect();
    for (alg, model) in [
        (Algorithm::A2c, RankingModel::Pointwise),
        (Algorithm::Ppo, RankingModel::Listwise),
        (Algorithm::Ddpg, RankingModel::Pointwise),
    ] {
        let out = run_ciprio_experiment(&small_ci(alg, model), &cycles).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.records.iter().all(|r| r.metric == MetricKind::Nrpa), "{alg} {model}");
    }
}

#[test]
fn incompatible_ranking_model_rejected() {
    let cycles = vec![cycle(1, &[0; 6]), cycle(2, &[0; 6])];
    for (alg, model) in [(Algorithm::Dqn, RankingModel::Pointwise), (Algorithm::Ddpg, RankingModel::Pairwise)] {
        let err = run_ciprio_experiment(&small_ci(alg, model), &cycles).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}

#[test]
fn ci_records_repeat_exactly() {
    let cycles: Vec<Cycle> = (1..=4).map(|i| cycle(i, &[0, 0, 1, 0, 0, 0, 1])).collect();
    let c = small_ci(Algorithm::A2c, RankingModel::Pairwise);
    let a = run_ciprio_experiment(&c, &cycles).unwrap();
    let b = run_ciprio_experiment(&c, &cycles).unwrap();
    assert_eq!(metric_fingerprint(&a.records).unwrap(), metric_fingerprint(&b.records).unwrap());
}
