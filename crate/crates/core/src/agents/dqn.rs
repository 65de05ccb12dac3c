use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::policy::argmax;
use super::{stack_rows, Action, ActionSpace, Agent, AgentConfig, Algorithm, DqnConfig, LearnStats, ReplayBuffer, Transition};
use crate::neural::loss::mse_selected;
use crate::neural::noise::perturb_into;
use crate::neural::{AdamState, GaussianParamNoise, Mlp, OutputActivation};
use crate::{Error, Result};

/// Linearly annealed epsilon after `step` of `horizon` environment steps.
pub fn epsilon_at(config: &DqnConfig, horizon: u64, step: u64) -> f64 {
    let span = (config.exploration_fraction * horizon as f64).round() as u64;
    if span == 0 || step >= span {
        return config.epsilon_end;
    }
    let frac = step as f64 / span as f64;
    config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start)
}

/// Uniform action with probability `epsilon`, otherwise the first maximiser of `q`.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.len())
    } else {
        argmax(q)
    }
}

/// `y = r + γ (1 - done) max_a' Q_target(s', a')`.
pub fn td_targets(rewards: &[f64], dones: &[bool], next_q: &Array2<f64>, gamma: f64) -> Vec<f64> {
    rewards
        .iter()
        .zip(dones)
        .zip(next_q.rows())
        .map(|((r, &d), q)| {
            if d {
                *r
            } else {
                r + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect()
}

/// One gradient step of the online network on the squared TD error; returns the loss.
pub fn dqn_learn(online: &mut Mlp, target: &Mlp, opt: &mut AdamState, batch: &[&Transition], gamma: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let dim = online.input_dim();
    let states = stack_rows(batch.iter().map(|t| t.state.as_slice()), dim)?;
    let next = stack_rows(batch.iter().map(|t| t.next_state.as_slice()), dim)?;
    let actions = batch.iter().map(|t| t.action.discrete()).collect::<Result<Vec<_>>>()?;
    let rewards: Vec<f64> = batch.iter().map(|t| t.reward).collect();
    let dones: Vec<bool> = batch.iter().map(|t| t.done).collect();

    let next_q = target.forward_batch(next.view())?;
    let targets = td_targets(&rewards, &dones, &next_q, gamma);
    let cache = online.forward_cached(states)?;
    let (loss, upstream) = mse_selected(cache.output(), &actions, &targets)?;
    let grads = online.backward(&cache, &upstream)?;
    opt.step_mlp(online, &grads)?;
    if !online.all_finite() {
        return Err(Error::Divergence("Q-network parameters became non-finite".into()));
    }
    Ok(loss)
}

/// Deep Q-network with replay, a hard-updated target network and optional
/// Gaussian parameter noise on the acting network.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    online: Mlp,
    target: Mlp,
    acting: Option<(Mlp, GaussianParamNoise)>,
    opt: AdamState,
    buffer: ReplayBuffer<Transition>,
    config: DqnConfig,
    gamma: f64,
    horizon: u64,
    rng: ChaCha8Rng,
    steps: u64,
    learn_calls: u64,
}

impl DqnAgent {
    pub fn new(config: &AgentConfig, obs_dim: usize, n_actions: usize) -> Result<Self> {
        config.validate()?;
        if n_actions < 2 {
            return Err(Error::InvalidArgument("need at least two discrete actions".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let online = Mlp::new(&config.layer_sizes(obs_dim, n_actions), OutputActivation::Identity, &mut rng)?;
        let acting = match config.dqn.param_noise {
            Some(sigma) => {
                let noise = GaussianParamNoise::new(sigma)?;
                let mut net = online.clone();
                perturb_into(&mut net, &online, noise, &mut rng);
                Some((net, noise))
            }
            None => None,
        };
        Ok(Self {
            target: online.clone(),
            online,
            acting,
            opt: AdamState::new(config.adam()),
            buffer: ReplayBuffer::new(config.dqn.buffer_capacity)?,
            config: config.dqn.clone(),
            gamma: config.gamma,
            horizon: config.horizon,
            rng,
            steps: 0,
            learn_calls: 0,
        })
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn epsilon(&self) -> f64 {
        epsilon_at(&self.config, self.horizon, self.steps)
    }

    pub fn learn_calls(&self) -> u64 {
        self.learn_calls
    }

    pub fn buffer(&self) -> &ReplayBuffer<Transition> {
        &self.buffer
    }

    fn learn(&mut self) -> Result<f64> {
        let batch = self.buffer.sample(self.config.batch_size, &mut self.rng)?;
        let loss = dqn_learn(&mut self.online, &self.target, &mut self.opt, &batch, self.gamma)?;
        self.learn_calls += 1;
        if self.learn_calls % self.config.target_update_interval == 0 {
            self.target.clone_from(&self.online);
        }
        if let Some((net, noise)) = &mut self.acting {
            perturb_into(net, &self.online, *noise, &mut self.rng);
        }
        Ok(loss)
    }
}

impl Agent for DqnAgent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Dqn
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(self.online.output_dim())
    }

    fn act(&mut self, observation: &[f64]) -> Result<Action> {
        let eps = self.epsilon();
        self.steps += 1;
        let net = self.acting.as_ref().map_or(&self.online, |(n, _)| n);
        let q = net.forward(observation)?;
        Ok(Action::Discrete(epsilon_greedy(&q, eps, &mut self.rng)))
    }

    fn act_greedy(&self, observation: &[f64]) -> Result<Action> {
        Ok(Action::Discrete(argmax(&self.online.forward(observation)?)))
    }

    fn observe(&mut self, transition: Transition) -> Result<Option<LearnStats>> {
        let a = transition.action.discrete()?;
        if a >= self.online.output_dim() {
            return Err(Error::InvalidArgument(format!("action {a} out of range")));
        }
        self.buffer.push(transition);
        let ready = self.buffer.len() >= self.config.learning_starts.max(self.config.batch_size);
        if ready && self.steps % self.config.train_freq == 0 {
            let loss = self.learn()?;
            return Ok(Some(LearnStats { value_loss: loss, ..LearnStats::default() }));
        }
        Ok(None)
    }
}
