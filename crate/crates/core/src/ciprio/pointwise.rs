use super::{not_loaded, LoadedCycle, RankStep, RankingEnv, RankingModel};
use crate::agents::{Action, ActionSpace};
use crate::domain::Cycle;
use crate::metrics::cycle_score;
use crate::{Error, Result};

/// Scores one test per step; the ranking sorts by descending score with
/// ties broken by test id.
#[derive(Debug, Clone)]
pub struct PointwiseEnv {
    feature_dim: usize,
    data: Option<LoadedCycle>,
    scores: Vec<f64>,
    clipped: u64,
}

impl PointwiseEnv {
    pub fn new(feature_dim: usize) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        Ok(Self { feature_dim, data: None, scores: Vec::new(), clipped: 0 })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    fn done(&self) -> bool {
        self.data.as_ref().is_none_or(|d| self.scores.len() == d.len())
    }
}

impl RankingEnv for PointwiseEnv {
    fn model(&self) -> RankingModel {
        RankingModel::Pointwise
    }

    fn observation_dim(&self) -> usize {
        self.feature_dim
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous(1)
    }

    fn load_cycle(&mut self, cycle: &Cycle) -> Result<()> {
        let data = LoadedCycle::new(cycle, self.feature_dim)?;
        self.scores = vec![0.0; data.len()];
        self.data = Some(data);
        Ok(())
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        let data = self.data.as_ref().ok_or_else(not_loaded)?;
        self.scores.clear();
        Ok(data.features[0].clone())
    }

    fn step(&mut self, action: &Action) -> Result<RankStep> {
        if self.done() {
            return Err(Error::EpisodeFinished);
        }
        let a = action.continuous()?;
        if a.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, actual: a.len() });
        }
        let raw = a[0];
        if raw.is_nan() {
            return Err(Error::InvalidArgument("score is NaN".into()));
        }
        if !(0.0..=1.0).contains(&raw) {
            self.clipped += 1;
        }
        self.scores.push(raw.clamp(0.0, 1.0));
        let data = self.data.as_ref().expect("checked by done()");
        if self.scores.len() < data.len() {
            return Ok(RankStep {
                observation: data.features[self.scores.len()].clone(),
                reward: 0.0,
                done: false,
                ranking: None,
            });
        }
        let tests = data.cycle.tests();
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.sort_by(|&x, &y| {
            self.scores[y]
                .total_cmp(&self.scores[x])
                .then_with(|| tests[x].test_id.cmp(&tests[y].test_id))
        });
        let ranking = data.ranking(&idx)?;
        let reward = cycle_score(&ranking, &data.cycle)?.value;
        Ok(RankStep { observation: vec![0.0; self.feature_dim], reward, done: true, ranking: Some(ranking) })
    }

    fn clipped_actions(&self) -> u64 {
        self.clipped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::cycle;
    use crate::metrics::{apfd_of, nrpa_of};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn run(c: &Cycle, scores: &[f64]) -> (PointwiseEnv, Vec<RankStep>) {
        let mut env = PointwiseEnv::new(c.feature_dim()).unwrap();
        env.load_cycle(c).unwrap();
        env.reset().unwrap();
        let steps = scores.iter().map(|&s| env.step(&Action::Continuous(vec![s])).unwrap()).collect();
        (env, steps)
    }

    #[test]
    fn equal_scores_rank_by_test_id() {
        let c = cycle(&[("c", 0, 1.0), ("a", 1, 2.0), ("b", 0, 3.0)]);
        let (_, steps) = run(&c, &[0.5, 0.5, 0.5]);
        let r = steps.last().unwrap().ranking.clone().unwrap();
        assert_eq!(r.order(), ["a", "b", "c"]);
    }

    #[test]
    fn exactly_k_steps_with_zero_intermediate_reward() {
        let c = cycle(&[("a", 0, 1.0), ("b", 0, 2.0), ("c", 0, 3.0), ("d", 0, 4.0)]);
        let (mut env, steps) = run(&c, &[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(steps.len(), 4);
        assert!(steps[..3].iter().all(|s| s.reward == 0.0 && !s.done));
        assert!(steps[3].done);
        assert!(env.step(&Action::Continuous(vec![0.5])).is_err());
    }

    #[test]
    fn oracle_scores_on_all_pass_cycle_give_one() {
        let c = cycle(&[("a", 0, 3.0), ("b", 0, 1.0), ("c", 0, 2.0)]);
        let data = LoadedCycle::new(&c, c.feature_dim()).unwrap();
        let scores: Vec<f64> = data.optimal_pos.iter().map(|&p| 1.0 - p as f64 / 3.0).collect();
        let (_, steps) = run(&c, &scores);
        assert_eq!(steps.last().unwrap().reward, 1.0);
    }

    #[test]
    fn terminal_reward_matches_metrics_module() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let c_fail = cycle(&[("a", 0, 1.0), ("b", 1, 2.0), ("c", 0, 3.0), ("d", 1, 4.0), ("e", 0, 5.0)]);
        let c_pass = cycle(&[("a", 0, 1.0), ("b", 0, 2.0), ("c", 0, 3.0), ("d", 0, 4.0), ("e", 0, 5.0)]);
        for _ in 0..50 {
            let scores: Vec<f64> = (0..5).map(|_| rng.random()).collect();
            let (_, steps) = run(&c_fail, &scores);
            let last = steps.last().unwrap();
            let r = last.ranking.as_ref().unwrap();
            assert_eq!(last.reward, apfd_of(r, &c_fail).unwrap());
            let (_, steps) = run(&c_pass, &scores);
            let last = steps.last().unwrap();
            assert_eq!(last.reward, nrpa_of(last.ranking.as_ref().unwrap(), &c_pass).unwrap());
        }
    }

    #[test]
    fn out_of_range_scores_are_clipped_and_counted() {
        let c = cycle(&[("a", 0, 1.0), ("b", 0, 2.0)]);
        let (env, _) = run(&c, &[1.7, -0.3]);
        assert_eq!(env.clipped_actions(), 2);
        assert_eq!(env.scores(), [1.0, 0.0]);
    }
}
