use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::RankingEnv;
use crate::agents::{Agent, Transition};
use crate::domain::{episode_budget, Cycle, Ranking};
use crate::metrics::{apfd_of, cycle_score, nrpa_of, MetricValue};
use crate::{Error, Result};

/// Hard per-cycle training step limit.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000;
/// Consecutive non-improving episodes tolerated before training stops.
pub const DEFAULT_PATIENCE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainBudget {
    pub step_cap: u64,
    pub patience: usize,
    /// Multiplies the size-based step budget; 1.0 keeps it unchanged.
    pub budget_scale: f64,
}

impl Default for TrainBudget {
    fn default() -> Self {
        Self { step_cap: DEFAULT_STEP_CAP, patience: DEFAULT_PATIENCE, budget_scale: 1.0 }
    }
}

impl TrainBudget {
    /// Training steps allowed on a cycle of `n` tests.
    pub fn steps_for(&self, n: usize) -> Result<u64> {
        let scaled = (episode_budget(n)? as f64 * self.budget_scale).ceil() as u64;
        Ok(scaled.clamp(1, self.step_cap.max(1)))
    }
}

/// Outcome of training on one cycle and ranking the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleEvaluation {
    pub trained_on: u64,
    pub cycle_id: u64,
    pub ranking: Vec<String>,
    /// APFD when the evaluated cycle has failures, NRPA otherwise.
    pub metric: MetricValue,
    pub nrpa: f64,
    pub apfd: Option<f64>,
    pub train_steps: u64,
    pub train_episodes: u64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrainOutcome {
    steps: u64,
    episodes: u64,
}

fn train_on_cycle(agent: &mut dyn Agent, env: &mut dyn RankingEnv, cycle: &Cycle, budget: &TrainBudget) -> Result<TrainOutcome> {
    env.load_cycle(cycle)?;
    let limit = budget.steps_for(cycle.len())?;
    let mut steps = 0u64;
    let mut episodes = 0u64;
    let mut best = f64::NEG_INFINITY;
    let mut stale = 0usize;
    while steps < limit {
        let mut obs = env.reset()?;
        let mut total = 0.0;
        loop {
            let action = agent.act(&obs)?;
            let step = env.step(&action)?;
            steps += 1;
            total += step.reward;
            // Running out of budget mid-episode is treated as terminal.
            let done = step.done || steps >= limit;
            agent.observe(Transition {
                state: std::mem::take(&mut obs),
                action,
                reward: step.reward,
                next_state: step.observation.clone(),
                done,
            })?;
            obs = step.observation;
            if done {
                break;
            }
        }
        episodes += 1;
        if total > best {
            best = total;
            stale = 0;
        } else {
            stale += 1;
            if stale >= budget.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome { steps, episodes })
}

/// Greedy episode on `cycle`; returns the emitted ranking.
pub fn rank_cycle(agent: &dyn Agent, env: &mut dyn RankingEnv, cycle: &Cycle) -> Result<Ranking> {
    env.load_cycle(cycle)?;
    let mut obs = env.reset()?;
    loop {
        let step = env.step(&agent.act_greedy(&obs)?)?;
        if step.done {
            return step
                .ranking
                .ok_or_else(|| Error::InvalidArgument("environment finished without a ranking".into()));
        }
        obs = step.observation;
    }
}

/// Trains on cycle `i` then evaluates greedily on cycle `i + 1`, for every
/// consecutive pair in `cycles`.
pub fn replay_train(
    agent: &mut dyn Agent,
    env: &mut dyn RankingEnv,
    cycles: &[Cycle],
    budget: &TrainBudget,
) -> Result<Vec<CycleEvaluation>> {
    if cycles.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "replay training needs at least 2 cycles, got {}",
            cycles.len()
        )));
    }
    if !(budget.budget_scale > 0.0) || budget.patience == 0 {
        return Err(Error::InvalidArgument("budget scale and patience must be positive".into()));
    }
    if cycles.windows(2).any(|w| w[0].cycle_id >= w[1].cycle_id) {
        return Err(Error::InvalidArgument("cycles must be ordered by increasing cycle_id".into()));
    }
    let mut log = Vec::with_capacity(cycles.len() - 1);
    for pair in cycles.windows(2) {
        let (train, eval) = (&pair[0], &pair[1]);
        let t0 = Instant::now();
        let outcome = train_on_cycle(agent, env, train, budget)?;
        let train_seconds = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let ranking = rank_cycle(agent, env, eval)?;
        let predict_seconds = t1.elapsed().as_secs_f64();

        let metric = cycle_score(&ranking, eval)?;
        log.push(CycleEvaluation {
            trained_on: train.cycle_id,
            cycle_id: eval.cycle_id,
            nrpa: nrpa_of(&ranking, eval)?,
            apfd: if eval.failed() { Some(apfd_of(&ranking, eval)?) } else { None },
            ranking: ranking.order().to_vec(),
            metric,
            train_steps: outcome.steps,
            train_episodes: outcome.episodes,
            train_seconds,
            predict_seconds,
        });
    }
    Ok(log)
}
