use super::{not_loaded, LoadedCycle, RankStep, RankingEnv, RankingModel};
use crate::agents::{Action, ActionSpace};
use crate::domain::Cycle;
use crate::{Error, Result};

/// Penalty for choosing a dummy or an already ranked slot.
pub const INVALID_SELECTION_REWARD: f64 = -1.0;

/// Picks the next test by slot index. The cycle is padded to `slots`
/// entries with zero-feature dummies.
///
/// The observation holds the features of every slot followed by one flag
/// per slot that is 1 while the slot can still be ranked; ranked slots and
/// dummies show zero features.
#[derive(Debug, Clone)]
pub struct ListwiseEnv {
    feature_dim: usize,
    slots: usize,
    data: Option<LoadedCycle>,
    selected: Vec<usize>,
    taken: Vec<bool>,
    steps: usize,
    done: bool,
}

impl ListwiseEnv {
    pub fn new(feature_dim: usize, slots: usize) -> Result<Self> {
        if feature_dim == 0 || slots == 0 {
            return Err(Error::InvalidArgument("feature dimension and slot count must be positive".into()));
        }
        Ok(Self { feature_dim, slots, data: None, selected: Vec::new(), taken: Vec::new(), steps: 0, done: true })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn step_cap(&self) -> usize {
        4 * self.slots
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    fn observation(&self) -> Vec<f64> {
        let mut obs = vec![0.0; self.slots * (self.feature_dim + 1)];
        let Some(data) = &self.data else { return obs };
        let flags = self.slots * self.feature_dim;
        if self.done {
            return obs;
        }
        for (i, f) in data.features.iter().enumerate() {
            if !self.taken[i] {
                obs[i * self.feature_dim..(i + 1) * self.feature_dim].copy_from_slice(f);
                obs[flags + i] = 1.0;
            }
        }
        obs
    }
}

impl RankingEnv for ListwiseEnv {
    fn model(&self) -> RankingModel {
        RankingModel::Listwise
    }

    fn observation_dim(&self) -> usize {
        self.slots * (self.feature_dim + 1)
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(self.slots)
    }

    fn load_cycle(&mut self, cycle: &Cycle) -> Result<()> {
        if cycle.len() > self.slots {
            return Err(Error::InvalidArgument(format!(
                "cycle {} has {} tests but only {} slots",
                cycle.cycle_id,
                cycle.len(),
                self.slots
            )));
        }
        self.data = Some(LoadedCycle::new(cycle, self.feature_dim)?);
        self.done = true;
        Ok(())
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        let k = self.data.as_ref().ok_or_else(not_loaded)?.len();
        self.selected.clear();
        self.taken = vec![false; k];
        self.steps = 0;
        self.done = false;
        Ok(self.observation())
    }

    fn step(&mut self, action: &Action) -> Result<RankStep> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let slot = action.discrete()?;
        if slot >= self.slots {
            return Err(Error::InvalidArgument(format!("slot {slot} out of range 0..{}", self.slots)));
        }
        let data = self.data.as_ref().ok_or_else(not_loaded)?;
        let k = data.len();
        self.steps += 1;
        let reward = if slot < k && !self.taken[slot] {
            let pos = self.selected.len();
            self.selected.push(slot);
            self.taken[slot] = true;
            1.0 - pos.abs_diff(data.optimal_pos[slot]) as f64 / k as f64
        } else {
            INVALID_SELECTION_REWARD
        };
        if self.selected.len() == k || self.steps >= self.step_cap() {
            let tests = data.cycle.tests();
            let mut rest: Vec<usize> = (0..k).filter(|&i| !self.taken[i]).collect();
            rest.sort_by(|&a, &b| tests[a].test_id.cmp(&tests[b].test_id));
            let mut order = self.selected.clone();
            order.extend(rest);
            let ranking = data.ranking(&order)?;
            self.done = true;
            return Ok(RankStep { observation: self.observation(), reward, done: true, ranking: Some(ranking) });
        }
        Ok(RankStep { observation: self.observation(), reward, done: false, ranking: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ciprio::oracle;
    use crate::domain::fixtures::cycle;
    use crate::domain::optimal_ranking;

    fn sample() -> Cycle {
        cycle(&[("a", 0, 1.0), ("b", 1, 2.0), ("c", 0, 3.0)])
    }

    fn env_on(c: &Cycle, slots: usize) -> ListwiseEnv {
        let mut env = ListwiseEnv::new(c.feature_dim(), slots).unwrap();
        env.load_cycle(c).unwrap();
        env.reset().unwrap();
        env
    }

    #[test]
    fn optimal_first_choice_earns_one() {
        let c = sample();
        let mut env = env_on(&c, 5);
        // "b" is the failing test and ranks first.
        assert_eq!(env.step(&Action::Discrete(1)).unwrap().reward, 1.0);
    }

    #[test]
    fn dummy_and_repeat_are_penalised_without_append() {
        let c = sample();
        let mut env = env_on(&c, 5);
        assert_eq!(env.step(&Action::Discrete(4)).unwrap().reward, -1.0);
        assert!(env.selected().is_empty());
        env.step(&Action::Discrete(0)).unwrap();
        assert_eq!(env.step(&Action::Discrete(0)).unwrap().reward, -1.0);
        assert_eq!(env.selected(), [0]);
    }

    #[test]
    fn oracle_reproduces_optimal_with_total_reward_k() {
        let c = sample();
        let mut env = ListwiseEnv::new(c.feature_dim(), 6).unwrap();
        let (ranking, rewards) = oracle::run(&mut env, &c);
        assert_eq!(ranking, optimal_ranking(&c).unwrap());
        assert_eq!(rewards.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn cap_appends_remaining_tests_by_id() {
        let c = cycle(&[("z", 0, 1.0), ("y", 0, 2.0), ("x", 0, 3.0)]);
        let mut env = env_on(&c, 3);
        env.step(&Action::Discrete(1)).unwrap();
        let mut last = None;
        for n in 1..env.step_cap() {
            let step = env.step(&Action::Discrete(1)).unwrap();
            assert!((-1.0..=1.0).contains(&step.reward));
            if step.done {
                assert_eq!(n + 1, env.step_cap());
                last = step.ranking;
                break;
            }
        }
        assert_eq!(last.unwrap().order(), ["y", "x", "z"]);
    }

    #[test]
    fn ranked_slots_vanish_from_the_observation() {
        let c = sample();
        let mut env = env_on(&c, 4);
        let d = c.feature_dim();
        let obs = env.step(&Action::Discrete(2)).unwrap().observation;
        assert_eq!(obs.len(), env.observation_dim());
        assert!(obs[2 * d..3 * d].iter().all(|&v| v == 0.0));
        assert_eq!(&obs[4 * d..], [1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn out_of_range_slot_is_an_error() {
        let c = sample();
        let mut env = env_on(&c, 4);
        assert!(env.step(&Action::Discrete(4)).is_err());
    }

    #[test]
    fn oversized_cycle_is_rejected() {
        let c = sample();
        let mut env = ListwiseEnv::new(c.feature_dim(), 2).unwrap();
        assert!(env.load_cycle(&c).is_err());
    }
}
