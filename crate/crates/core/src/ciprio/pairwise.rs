use super::{not_loaded, LoadedCycle, RankStep, RankingEnv, RankingModel};
use crate::agents::{Action, ActionSpace};
use crate::domain::Cycle;
use crate::{Error, Result};

/// Selection sort driven by the agent: each step compares the current
/// best candidate of the unsorted suffix with the next test in it.
///
/// Action 0 keeps the first test of the pair as higher priority, action 1
/// promotes the second.
#[derive(Debug, Clone)]
pub struct PairwiseEnv {
    feature_dim: usize,
    data: Option<LoadedCycle>,
    order: Vec<usize>,
    /// Boundary of the sorted prefix.
    i: usize,
    /// Index into `order` of the best candidate so far.
    best: usize,
    /// Index into `order` of the challenger.
    j: usize,
    done: bool,
    steps: usize,
}

impl PairwiseEnv {
    pub fn new(feature_dim: usize) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        Ok(Self { feature_dim, data: None, order: Vec::new(), i: 0, best: 0, j: 1, done: true, steps: 0 })
    }

    /// Comparisons made in the current episode.
    pub fn comparisons(&self) -> usize {
        self.steps
    }

    /// The sorted prefix built so far.
    pub fn sorted_prefix(&self) -> &[usize] {
        &self.order[..self.i]
    }

    fn observation(&self) -> Vec<f64> {
        let data = self.data.as_ref().expect("loaded");
        if self.done {
            return vec![0.0; 2 * self.feature_dim];
        }
        let mut obs = data.features[self.order[self.best]].clone();
        obs.extend_from_slice(&data.features[self.order[self.j]]);
        obs
    }
}

impl RankingEnv for PairwiseEnv {
    fn model(&self) -> RankingModel {
        RankingModel::Pairwise
    }

    fn observation_dim(&self) -> usize {
        2 * self.feature_dim
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(2)
    }

    fn load_cycle(&mut self, cycle: &Cycle) -> Result<()> {
        if cycle.len() < 2 {
            return Err(Error::InvalidArgument("pairwise ranking needs at least two tests".into()));
        }
        self.data = Some(LoadedCycle::new(cycle, self.feature_dim)?);
        self.done = true;
        Ok(())
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        let k = self.data.as_ref().ok_or_else(not_loaded)?.len();
        self.order = (0..k).collect();
        self.i = 0;
        self.best = 0;
        self.j = 1;
        self.steps = 0;
        self.done = false;
        Ok(self.observation())
    }

    fn step(&mut self, action: &Action) -> Result<RankStep> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let a = action.discrete()?;
        if a > 1 {
            return Err(Error::InvalidArgument(format!("pairwise action {a} not in {{0, 1}}")));
        }
        let data = self.data.as_ref().ok_or_else(not_loaded)?;
        let first = self.order[self.best];
        let second = self.order[self.j];
        let (chosen, other) = if a == 0 { (first, second) } else { (second, first) };
        let reward = if data.cycle.tests()[chosen].failed() {
            1.0
        } else if data.optimal_pos[chosen] < data.optimal_pos[other] {
            0.5
        } else {
            0.0
        };
        if a == 1 {
            self.best = self.j;
        }
        self.steps += 1;
        self.j += 1;
        let k = self.order.len();
        if self.j == k {
            self.order.swap(self.i, self.best);
            self.i += 1;
            self.best = self.i;
            self.j = self.i + 1;
            if self.i + 1 >= k {
                self.i = k;
                self.done = true;
            }
        }
        let ranking = if self.done { Some(data.ranking(&self.order)?) } else { None };
        Ok(RankStep { observation: self.observation(), reward, done: self.done, ranking })
    }
}
