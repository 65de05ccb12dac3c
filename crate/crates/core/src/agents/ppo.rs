use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::a2c::env_action;
use super::policy::{StochasticPolicy, ValueFunction};
use super::{stack_rows, Action, ActionSpace, Agent, AgentConfig, Algorithm, LearnStats, Transition};
use crate::neural::loss::clipped_surrogate;
use crate::{Error, Result};

/// Generalised advantage estimates and the matching value targets.
///
/// `values[t]` is `V(s_t)`; `last_value` is `V` of the state after the final
/// step. Both the TD error and the recursion are cut at every `done`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        adv[t] = acc;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

fn normalize(v: &mut [f64]) {
    if v.len() < 2 {
        return;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    v.iter_mut().for_each(|x| *x = (*x - mean) / (std + 1e-8));
}

#[derive(Debug, Clone)]
struct Step {
    transition: Transition,
    logp: f64,
    value: f64,
}

/// Proximal policy optimisation with a clipped surrogate objective.
#[derive(Debug, Clone)]
pub struct PpoAgent {
    policy: StochasticPolicy,
    critic: ValueFunction,
    space: ActionSpace,
    config: AgentConfig,
    rng: ChaCha8Rng,
    pending: Option<(Vec<f64>, Action, f64)>,
    rollout: Vec<Step>,
}

impl PpoAgent {
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
            rollout: Vec::with_capacity(config.ppo.rollout_len.min(1 << 16)),
        })
    }

    pub fn policy(&self) -> &StochasticPolicy {
        &self.policy
    }

    /// Transitions and stored log-probabilities collected since the last update.
    pub fn rollout(&self) -> impl Iterator<Item = (&Transition, f64)> {
        self.rollout.iter().map(|s| (&s.transition, s.logp))
    }

    fn update(&mut self) -> Result<LearnStats> {
        let rollout = std::mem::take(&mut self.rollout);
        let cfg = self.config.ppo.clone();
        let dim = self.policy.net().input_dim();
        let last = &rollout.last().expect("non-empty rollout").transition;
        let last_value = if last.done { 0.0 } else { self.critic.value(&last.next_state)? };
        let rewards: Vec<f64> = rollout.iter().map(|s| s.transition.reward).collect();
        let values: Vec<f64> = rollout.iter().map(|s| s.value).collect();
        let dones: Vec<bool> = rollout.iter().map(|s| s.transition.done).collect();
        let (mut adv, returns) = gae(&rewards, &values, &dones, last_value, self.config.gamma, cfg.gae_lambda);
        normalize(&mut adv);

        let mut order: Vec<usize> = (0..rollout.len()).collect();
        let mut stats = LearnStats::default();
        let mut batches = 0.0;
        for _ in 0..cfg.epochs.max(1) {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(cfg.minibatch_size) {
                let states = stack_rows(chunk.iter().map(|&i| rollout[i].transition.state.as_slice()), dim)?;
                let actions: Vec<Action> = chunk.iter().map(|&i| rollout[i].transition.action.clone()).collect();
                let logp_old: Vec<f64> = chunk.iter().map(|&i| rollout[i].logp).collect();
                let mb_adv: Vec<f64> = chunk.iter().map(|&i| adv[i]).collect();
                let mb_ret: Vec<f64> = chunk.iter().map(|&i| returns[i]).collect();
                let m = chunk.len() as f64;

                let eval = self.policy.evaluate(states.clone(), &actions)?;
                let (loss, dlogp) = clipped_surrogate(&eval.logp, &logp_old, &mb_adv, cfg.clip_range)?;
                let dent = vec![-cfg.entropy_coef / m; chunk.len()];
                self.policy.apply(&eval, &dlogp, &dent, self.config.max_grad_norm)?;
                let vloss = self.critic.fit(states, &mb_ret, cfg.value_coef, self.config.max_grad_norm)?;

                stats.policy_loss += loss;
                stats.value_loss += vloss;
                stats.entropy += eval.entropy.iter().sum::<f64>() / m;
                batches += 1.0;
            }
        }
        stats.policy_loss /= batches;
        stats.value_loss /= batches;
        stats.entropy /= batches;
        Ok(stats)
    }
}

impl Agent for PpoAgent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ppo
    }

    fn action_space(&self) -> ActionSpace {
        self.space
    }

    fn act(&mut self, observation: &[f64]) -> Result<Action> {
        let (raw, logp) = self.policy.sample(observation, &mut self.rng)?;
        let out = env_action(&raw);
        self.pending = Some((observation.to_vec(), raw, logp));
        Ok(out)
    }

    fn act_greedy(&self, observation: &[f64]) -> Result<Action> {
        Ok(env_action(&self.policy.greedy(observation)?))
    }

    fn observe(&mut self, mut transition: Transition) -> Result<Option<LearnStats>> {
        let dim = self.policy.net().input_dim();
        if transition.state.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: transition.state.len() });
        }
        let logp = match self.pending.take() {
            Some((state, raw, logp)) if state == transition.state => {
                transition.action = raw;
                logp
            }
            _ => {
                let states = stack_rows([transition.state.as_slice()], dim)?;
                self.policy.evaluate(states, std::slice::from_ref(&transition.action))?.logp[0]
            }
        };
        let value = self.critic.value(&transition.state)?;
        self.rollout.push(Step { transition, logp, value });
        if self.rollout.len() >= self.config.ppo.rollout_len {
            return self.update().map(Some);
        }
        Ok(None)
    }
}
