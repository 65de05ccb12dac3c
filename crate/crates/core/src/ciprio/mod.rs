//! Test-case prioritization as episodic MDPs: one CI cycle per episode,
//! ending in a [`Ranking`].

mod listwise;
mod pairwise;
mod pointwise;
mod replay;

use serde::{Deserialize, Serialize};

pub use listwise::ListwiseEnv;
pub use pairwise::PairwiseEnv;
pub use pointwise::PointwiseEnv;
pub use replay::{rank_cycle, replay_train, CycleEvaluation, TrainBudget, DEFAULT_PATIENCE, DEFAULT_STEP_CAP};

use crate::agents::{Action, ActionSpace};
use crate::domain::{cycle_features, optimal_ranking, Cycle, Ranking};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingModel {
    Pairwise,
    Pointwise,
    Listwise,
}

impl RankingModel {
    pub fn as_str(self) -> &'static str {
        match self {
            RankingModel::Pairwise => "pairwise",
            RankingModel::Pointwise => "pointwise",
            RankingModel::Listwise => "listwise",
        }
    }
}

impl std::str::FromStr for RankingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairwise" => Ok(RankingModel::Pairwise),
            "pointwise" => Ok(RankingModel::Pointwise),
            "listwise" => Ok(RankingModel::Listwise),
            other => Err(Error::InvalidArgument(format!("unknown ranking model {other}"))),
        }
    }
}

impl std::fmt::Display for RankingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Set on the final step.
    pub ranking: Option<Ranking>,
}

pub trait RankingEnv: Send {
    fn model(&self) -> RankingModel;

    fn observation_dim(&self) -> usize;

    fn action_space(&self) -> ActionSpace;

    /// Makes `cycle` the subject of subsequent episodes.
    fn load_cycle(&mut self, cycle: &Cycle) -> Result<()>;

    /// Starts a new episode on the loaded cycle.
    fn reset(&mut self) -> Result<Vec<f64>>;

    fn step(&mut self, action: &Action) -> Result<RankStep>;

    /// Out-of-range continuous actions clipped so far.
    fn clipped_actions(&self) -> u64 {
        0
    }
}

/// Builds the environment for `model`. `slots` is the listwise padding
/// length and is ignored by the other models.
pub fn make_env(model: RankingModel, feature_dim: usize, slots: usize) -> Result<Box<dyn RankingEnv>> {
    Ok(match model {
        RankingModel::Pairwise => Box::new(PairwiseEnv::new(feature_dim)?),
        RankingModel::Pointwise => Box::new(PointwiseEnv::new(feature_dim)?),
        RankingModel::Listwise => Box::new(ListwiseEnv::new(feature_dim, slots)?),
    })
}

/// Per-cycle data shared by the three environments.
#[derive(Debug, Clone)]
pub(crate) struct LoadedCycle {
    pub cycle: Cycle,
    pub features: Vec<Vec<f64>>,
    /// 0-based position of each test in the optimal ranking.
    pub optimal_pos: Vec<usize>,
}

impl LoadedCycle {
    pub fn new(cycle: &Cycle, feature_dim: usize) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::EmptyCycle);
        }
        if cycle.feature_dim() != feature_dim {
            return Err(Error::DimensionMismatch { expected: feature_dim, actual: cycle.feature_dim() });
        }
        let opt = optimal_ranking(cycle)?;
        let mut optimal_pos = vec![0; cycle.len()];
        for (pos, id) in opt.order().iter().enumerate() {
            let idx = cycle.position_of(id).expect("optimal ranking is a permutation");
            optimal_pos[idx] = pos;
        }
        Ok(Self {
            cycle: cycle.clone(),
            features: cycle_features(cycle).into_iter().map(|f| f.values).collect(),
            optimal_pos,
        })
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn ranking(&self, indices: &[usize]) -> Result<Ranking> {
        Ranking::new(indices.iter().map(|&i| self.cycle.tests()[i].test_id.clone()).collect())
    }
}

fn not_loaded() -> Error {
    Error::InvalidArgument("no cycle loaded".into())
}

/// Scripted policy that knows the verdicts and always picks the action the
/// optimal ranking implies.
pub mod oracle {
    use super::*;

    /// Runs one episode of `env` on `cycle`; returns the ranking and the
    /// per-step rewards.
    pub fn run_optimal(env: &mut dyn RankingEnv, cycle: &Cycle) -> Result<(Ranking, Vec<f64>)> {
        env.load_cycle(cycle)?;
        let data = LoadedCycle::new(cycle, cycle.feature_dim())?;
        let mut obs = env.reset()?;
        let mut rewards = Vec::new();
        let mut state = OracleState::default();
        loop {
            let action = state.next(env.model(), &data, &obs);
            let step = env.step(&action)?;
            rewards.push(step.reward);
            if step.done {
                let ranking = step.ranking.ok_or_else(|| Error::InvalidArgument("episode ended without a ranking".into()))?;
                return Ok((ranking, rewards));
            }
            obs = step.observation;
        }
    }

    #[cfg(test)]
    pub(crate) fn run(env: &mut dyn RankingEnv, cycle: &Cycle) -> (Ranking, Vec<f64>) {
        run_optimal(env, cycle).unwrap()
    }

    #[derive(Default)]
    struct OracleState {
        t: usize,
        best: usize,
        j: usize,
        i: usize,
        order: Vec<usize>,
    }

    impl OracleState {
        fn next(&mut self, model: RankingModel, data: &LoadedCycle, _obs: &[f64]) -> Action {
            let k = data.len();
            match model {
                RankingModel::Pointwise => {
                    let a = 1.0 - data.optimal_pos[self.t] as f64 / k as f64;
                    self.t += 1;
                    Action::Continuous(vec![a])
                }
                RankingModel::Listwise => {
                    let mut by_pos: Vec<usize> = (0..k).collect();
                    by_pos.sort_by_key(|&i| data.optimal_pos[i]);
                    let a = by_pos[self.t];
                    self.t += 1;
                    Action::Discrete(a)
                }
                RankingModel::Pairwise => {
                    // Mirror the environment's selection sort.
                    if self.order.is_empty() {
                        self.order = (0..k).collect();
                        self.i = 0;
                        self.best = 0;
                        self.j = 1;
                    }
                    let b = self.order[self.best];
                    let c = self.order[self.j];
                    let second_wins = data.optimal_pos[c] < data.optimal_pos[b];
                    if second_wins {
                        self.best = self.j;
                    }
                    self.j += 1;
                    if self.j == k {
                        self.order.swap(self.i, self.best);
                        self.i += 1;
                        self.best = self.i;
                        self.j = self.i + 1;
                    }
                    Action::Discrete(usize::from(second_wins))
                }
            }
        }
    }
}
