//! Test-case prioritization over a CI history with the replay protocol:
//! train on cycle `i`, rank cycle `i + 1`.

use std::io::Write;
use std::path::Path;

use rltestbench_core::agents::build_agent;
use rltestbench_core::agents::AgentConfig;
use rltestbench_core::ciprio::{make_env, replay_train, CycleEvaluation, RankingModel};
use rltestbench_core::domain::Cycle;

use crate::config::{derive_seed, ExperimentConfig, Task};
use crate::dataset::{generate_dataset, load_dataset};
use crate::error::{HarnessError, Result};
use crate::records::RunRecord;

const AGENT_ROLE: u64 = 1;
const DATA_ROLE: u64 = 2;

/// Cycles the experiment runs on, with the number dropped at load time.
pub fn experiment_cycles(config: &ExperimentConfig) -> Result<(Vec<Cycle>, usize)> {
    if let Some(path) = &config.ciprio.dataset {
        let d = load_dataset(path, None)?;
        return Ok((d.cycles, d.dropped_cycles));
    }
    let profile = config
        .generator
        .as_ref()
        .ok_or_else(|| HarnessError::Config("no dataset path and no [generator] section".into()))?;
    let cycles = generate_dataset(profile, derive_seed(config.seed, 0, DATA_ROLE))?;
    let before = cycles.len();
    let kept: Vec<Cycle> = cycles.into_iter().filter(|c| c.len() >= crate::config::MIN_TESTS_PER_CYCLE).collect();
    let dropped = before - kept.len();
    Ok((kept, dropped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CiOutcome {
    pub records: Vec<RunRecord>,
    /// Per repetition, one evaluation per cycle after the first.
    pub evaluations: Vec<Vec<CycleEvaluation>>,
}

/// Runs the replay protocol on `cycles` once per repetition.
pub fn run_ciprio_experiment(config: &ExperimentConfig, cycles: &[Cycle]) -> Result<CiOutcome> {
    config.validate_for(Task::Ciprio)?;
    if cycles.len() < 2 {
        return Err(HarnessError::Data(format!("need at least 2 cycles, got {}", cycles.len())));
    }
    let dim = cycles[0].feature_dim();
    if let Some(c) = cycles.iter().find(|c| c.feature_dim() != dim) {
        return Err(HarnessError::Data(format!("cycle {} has a different feature width", c.cycle_id)));
    }
    let model = config.ciprio.model;
    let largest = cycles.iter().map(Cycle::len).max().expect("non-empty");
    let slots = config.ciprio.slots.unwrap_or(largest);
    if model == RankingModel::Listwise && slots < largest {
        return Err(HarnessError::Config(format!("slots {slots} smaller than the largest cycle ({largest})")));
    }
    let budget = config.ciprio.budget();
    let mut horizon = 0u64;
    for c in &cycles[..cycles.len() - 1] {
        horizon += budget.steps_for(c.len())?;
    }

    let label = config.label_for(Task::Ciprio);
    let reps = config.repetitions_for(Task::Ciprio);
    let mut out = CiOutcome { records: Vec::new(), evaluations: Vec::with_capacity(reps) };
    for rep in 0..reps {
        let seed = derive_seed(config.seed, rep, AGENT_ROLE);
        let mut env = make_env(model, dim, slots)?;
        let agent_config = AgentConfig { seed, horizon: horizon.max(1), ..config.agent.clone() };
        let mut agent = build_agent(&agent_config, env.observation_dim(), env.action_space())?;
        let log = replay_train(agent.as_mut(), env.as_mut(), cycles, &budget)?;
        for e in &log {
            out.records.push(RunRecord {
                label: label.clone(),
                algorithm: config.agent.algorithm.to_string(),
                repetition: rep,
                seed,
                index: e.cycle_id,
                metric: e.metric.kind,
                value: e.metric.value,
                train_seconds: e.train_seconds,
                predict_seconds: e.predict_seconds,
            });
        }
        let mean_nrpa = log.iter().map(|e| e.nrpa).sum::<f64>() / log.len() as f64;
        eprintln!("{label} repetition {rep}: {} evaluations, mean NRPA {mean_nrpa:.4}", log.len());
        out.evaluations.push(log);
    }
    Ok(out)
}

/// `repetition,trained_on,cycle_id,nrpa,apfd,train_steps,train_episodes,ranking`
/// with the ranking as space-separated test ids. APFD is empty for cycles
/// without failures.
pub fn write_evaluations<W: Write>(evaluations: &[Vec<CycleEvaluation>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["repetition", "trained_on", "cycle_id", "nrpa", "apfd", "train_steps", "train_episodes", "ranking"])?;
    for (rep, log) in evaluations.iter().enumerate() {
        for e in log {
            w.write_record([
                rep.to_string(),
                e.trained_on.to_string(),
                e.cycle_id.to_string(),
                e.nrpa.to_string(),
                e.apfd.map(|a| a.to_string()).unwrap_or_default(),
                e.train_steps.to_string(),
                e.train_episodes.to_string(),
                e.ranking.join(" "),
            ])?;
        }
    }
    w.flush().map_err(|e| HarnessError::Data(e.to_string()))?;
    Ok(())
}

pub fn save_evaluations(evaluations: &[Vec<CycleEvaluation>], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_evaluations(evaluations, std::io::BufWriter::new(file))
}
