use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::policy::{StochasticPolicy, ValueFunction};
use super::{stack_rows, Action, ActionSpace, Agent, AgentConfig, Algorithm, LearnStats, Transition};
use crate::{Error, Result};

/// Discounted returns over a contiguous segment. `bootstrap` stands in for
/// the value after the last step and is cut at every `done`.
pub fn n_step_returns(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for t in (0..rewards.len()).rev() {
        acc = if dones[t] { rewards[t] } else { rewards[t] + gamma * acc };
        out[t] = acc;
    }
    out
}

/// Clips Gaussian samples into the `[0, 1]` action box.
pub(crate) fn env_action(raw: &Action) -> Action {
    match raw {
        Action::Discrete(a) => Action::Discrete(*a),
        Action::Continuous(v) => Action::Continuous(v.iter().map(|x| x.clamp(0.0, 1.0)).collect()),
    }
}

/// Synchronous advantage actor-critic updating every `n_step` steps or at
/// episode end.
#[derive(Debug, Clone)]
pub struct A2cAgent {
    policy: StochasticPolicy,
    critic: ValueFunction,
    space: ActionSpace,
    config: AgentConfig,
    rng: ChaCha8Rng,
    pending: Option<(Vec<f64>, Action)>,
    segment: Vec<Transition>,
}

impl A2cAgent {
    pub fn new(config: &AgentConfig, obs_dim: usize, space: ActionSpace) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let policy = StochasticPolicy::new(obs_dim, space, config, &mut rng)?;
        let critic = ValueFunction::new(obs_dim, config, &mut rng)?;
        Ok(Self {
            policy,
            critic,
            space,
            config: config.clone(),
            rng,
            pending: None,
            segment: Vec::with_capacity(config.a2c.n_step),
        })
    }

    pub fn policy(&self) -> &StochasticPolicy {
        &self.policy
    }

    pub fn critic(&self) -> &ValueFunction {
        &self.critic
    }

    fn update(&mut self) -> Result<LearnStats> {
        let segment = std::mem::take(&mut self.segment);
        let dim = self.policy.net().input_dim();
        let last = segment.last().expect("update called with a non-empty segment");
        let bootstrap = if last.done { 0.0 } else { self.critic.value(&last.next_state)? };
        let rewards: Vec<f64> = segment.iter().map(|t| t.reward).collect();
        let dones: Vec<bool> = segment.iter().map(|t| t.done).collect();
        let returns = n_step_returns(&rewards, &dones, bootstrap, self.config.gamma);
        let states = stack_rows(segment.iter().map(|t| t.state.as_slice()), dim)?;
        let actions: Vec<Action> = segment.iter().map(|t| t.action.clone()).collect();
        let n = segment.len() as f64;
        let cfg = &self.config.a2c;

        let mut stats = LearnStats::default();
        for _ in 0..cfg.epochs.max(1) {
            let values = self.critic.values(&states)?;
            let adv: Vec<f64> = returns.iter().zip(&values).map(|(r, v)| r - v).collect();
            let eval = self.policy.evaluate(states.clone(), &actions)?;
            let dlogp: Vec<f64> = adv.iter().map(|a| -a / n).collect();
            let dent = vec![-cfg.entropy_coef / n; adv.len()];
            stats.policy_loss = -eval.logp.iter().zip(&adv).map(|(l, a)| l * a).sum::<f64>() / n;
            stats.entropy = eval.entropy.iter().sum::<f64>() / n;
            self.policy.apply(&eval, &dlogp, &dent, self.config.max_grad_norm)?;
            stats.value_loss = self.critic.fit(states.clone(), &returns, cfg.value_coef, self.config.max_grad_norm)?;
        }
        Ok(stats)
    }
}

impl Agent for A2cAgent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::A2c
    }

    fn action_space(&self) -> ActionSpace {
        self.space
    }

    fn act(&mut self, observation: &[f64]) -> Result<Action> {
        let (raw, _) = self.policy.sample(observation, &mut self.rng)?;
        let out = env_action(&raw);
        self.pending = Some((observation.to_vec(), raw));
        Ok(out)
    }

    fn act_greedy(&self, observation: &[f64]) -> Result<Action> {
        Ok(env_action(&self.policy.greedy(observation)?))
    }

    fn observe(&mut self, mut transition: Transition) -> Result<Option<LearnStats>> {
        if let Some((state, raw)) = self.pending.take() {
            if state == transition.state {
                transition.action = raw;
            }
        }
        if transition.state.len() != self.policy.net().input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.policy.net().input_dim(),
                actual: transition.state.len(),
            });
        }
        let done = transition.done;
        self.segment.push(transition);
        if done || self.segment.len() >= self.config.a2c.n_step {
            return self.update().map(Some);
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_step_returns_match_hand_sums() {
        let g = 0.9;
        let r = n_step_returns(&[1.0, 2.0, 3.0], &[false, false, false], 10.0, g);
        let r2 = 3.0 + g * 10.0;
        let r1 = 2.0 + g * r2;
        let r0 = 1.0 + g * r1;
        assert_eq!(r, vec![r0, r1, r2]);
    }

    #[test]
    fn returns_cut_at_episode_end() {
        let r = n_step_returns(&[1.0, 2.0, 3.0], &[false, true, false], 10.0, 0.5);
        assert_eq!(r, vec![1.0 + 0.5 * 2.0, 2.0, 3.0 + 5.0]);
    }

    fn bandit(space: ActionSpace) -> f64 {
        // One-step episodes: reward 1 for action 1 (discrete) or for actions near 0.8.
        let mut c = AgentConfig { hidden: vec![16], seed: 2, lr: 3e-3, ..AgentConfig::new(Algorithm::A2c) };
        c.a2c.entropy_coef = 0.0;
        let mut agent = A2cAgent::new(&c, 1, space).unwrap();
        let obs = [1.0];
        for _ in 0..1500 {
            let a = agent.act(&obs).unwrap();
            let reward = match &a {
                Action::Discrete(i) => *i as f64,
                Action::Continuous(v) => 1.0 - (v[0] - 0.8).abs(),
            };
            agent
                .observe(Transition { state: obs.to_vec(), action: a, reward, next_state: obs.to_vec(), done: true })
                .unwrap();
        }
        match agent.act_greedy(&obs).unwrap() {
            Action::Discrete(i) => i as f64,
            Action::Continuous(v) => v[0],
        }
    }

    #[test]
    fn learns_a_discrete_bandit() {
        assert_eq!(bandit(ActionSpace::Discrete(2)), 1.0);
    }

    #[test]
    fn learns_a_continuous_bandit() {
        let mean = bandit(ActionSpace::Continuous(1));
        assert!((mean - 0.8).abs() < 0.15, "mean {mean}");
    }

    #[test]
    fn zero_rewards_and_zero_critic_leave_the_policy_unchanged() {
        let mut c = AgentConfig { hidden: vec![4], ..AgentConfig::new(Algorithm::A2c) };
        c.a2c.entropy_coef = 0.0;
        let mut agent = A2cAgent::new(&c, 1, ActionSpace::Discrete(2)).unwrap();
        let zero = crate::neural::Mlp::zeros(&[1, 4, 1], crate::neural::OutputActivation::Identity).unwrap();
        agent.critic = ValueFunction::from_net(zero, &c).unwrap();
        let before = agent.policy().net().clone();
        let a = agent.act(&[0.5]).unwrap();
        let t = Transition { state: vec![0.5], action: a, reward: 0.0, next_state: vec![0.5], done: true };
        let stats = agent.observe(t).unwrap().unwrap();
        assert_eq!(stats.policy_loss, 0.0);
        assert_eq!(agent.policy().net(), &before);
    }

    #[test]
    fn single_terminal_step_return_is_the_reward() {
        assert_eq!(n_step_returns(&[4.2], &[true], 99.0, 0.9), vec![4.2]);
    }

    #[test]
    fn updates_every_n_steps() {
        let mut c = AgentConfig { hidden: vec![4], ..AgentConfig::new(Algorithm::A2c) };
        c.a2c.n_step = 3;
        let mut agent = A2cAgent::new(&c, 1, ActionSpace::Discrete(2)).unwrap();
        let mut updates = Vec::new();
        for i in 0..9 {
            let a = agent.act(&[0.0]).unwrap();
            let t = Transition { state: vec![0.0], action: a, reward: 0.0, next_state: vec![0.0], done: false };
            updates.push((i, agent.observe(t).unwrap().is_some()));
        }
        let at: Vec<usize> = updates.iter().filter(|u| u.1).map(|u| u.0).collect();
        assert_eq!(at, vec![2, 5, 8]);
    }
}
