use ndarray::{s, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{clip_global_norm, stack_rows, Action, ActionSpace, Agent, AgentConfig, Algorithm, DdpgConfig, LearnStats, ReplayBuffer, Transition};
use crate::neural::{AdamState, Mlp, OutputActivation};
use crate::{Error, Result};

/// Actor, critic and their slowly tracking targets.
#[derive(Debug, Clone)]
pub struct DdpgNets {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic: Mlp,
    pub critic_target: Mlp,
}

fn concat(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(ndarray::Axis(1), &[states.view(), actions.view()]).expect("row counts agree")
}

/// One critic step on the TD error, one actor step along `dQ/da`, then soft
/// target updates. Returns `(critic_loss, actor_loss)`.
pub fn ddpg_learn(
    nets: &mut DdpgNets,
    actor_opt: &mut AdamState,
    critic_opt: &mut AdamState,
    batch: &[&Transition],
    gamma: f64,
    tau: f64,
    max_grad_norm: Option<f64>,
) -> Result<(f64, f64)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let obs_dim = nets.actor.input_dim();
    let act_dim = nets.actor.output_dim();
    let n = batch.len() as f64;
    let states = stack_rows(batch.iter().map(|t| t.state.as_slice()), obs_dim)?;
    let next = stack_rows(batch.iter().map(|t| t.next_state.as_slice()), obs_dim)?;
    let actions = stack_rows(
        batch.iter().map(|t| t.action.continuous()).collect::<Result<Vec<_>>>()?,
        act_dim,
    )?;

    let next_actions = nets.actor_target.forward_batch(next.view())?;
    let next_q = nets.critic_target.forward_batch(concat(&next, &next_actions).view())?;
    let targets: Vec<f64> = batch
        .iter()
        .enumerate()
        .map(|(i, t)| if t.done { t.reward } else { t.reward + gamma * next_q[[i, 0]] })
        .collect();

    let cache = nets.critic.forward_cached(concat(&states, &actions))?;
    let q = cache.output();
    let mut upstream = Array2::zeros((batch.len(), 1));
    let mut critic_loss = 0.0;
    for i in 0..batch.len() {
        let d = q[[i, 0]] - targets[i];
        critic_loss += d * d / n;
        upstream[[i, 0]] = 2.0 * d / n;
    }
    let mut g = nets.critic.backward(&cache, &upstream)?;
    clip_global_norm(&mut g.slices_mut(), max_grad_norm);
    critic_opt.step_mlp(&mut nets.critic, &g)?;

    let actor_cache = nets.actor.forward_cached(states.clone())?;
    let critic_cache = nets.critic.forward_cached(concat(&states, actor_cache.output()))?;
    let actor_loss = -critic_cache.output().sum() / n;
    let dq = nets.critic.backward(&critic_cache, &Array2::from_elem((batch.len(), 1), -1.0 / n))?;
    let da = dq.input.slice(s![.., obs_dim..]).to_owned();
    let mut ga = nets.actor.backward(&actor_cache, &da)?;
    clip_global_norm(&mut ga.slices_mut(), max_grad_norm);
    actor_opt.step_mlp(&mut nets.actor, &ga)?;

    nets.actor_target.soft_update_from(&nets.actor, tau)?;
    nets.critic_target.soft_update_from(&nets.critic, tau)?;
    if !(nets.actor.all_finite() && nets.critic.all_finite()) {
        return Err(Error::Divergence("DDPG parameters became non-finite".into()));
    }
    Ok((critic_loss, actor_loss))
}

/// Deterministic policy gradient with Gaussian action noise for exploration.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    nets: DdpgNets,
    actor_opt: AdamState,
    critic_opt: AdamState,
    buffer: ReplayBuffer<Transition>,
    config: DdpgConfig,
    gamma: f64,
    max_grad_norm: Option<f64>,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    steps: u64,
}

impl DdpgAgent {
    pub fn new(config: &AgentConfig, obs_dim: usize, act_dim: usize) -> Result<Self> {
        config.validate()?;
        if act_dim == 0 {
            return Err(Error::InvalidArgument("continuous action dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let actor = Mlp::new(&config.layer_sizes(obs_dim, act_dim), OutputActivation::Sigmoid, &mut rng)?;
        let critic = Mlp::new(&config.layer_sizes(obs_dim + act_dim, 1), OutputActivation::Identity, &mut rng)?;
        let sigma = config.ddpg.action_noise;
        let noise = if sigma > 0.0 {
            Some(Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            nets: DdpgNets { actor_target: actor.clone(), actor, critic_target: critic.clone(), critic },
            actor_opt: AdamState::new(config.adam()),
            critic_opt: AdamState::new(config.adam()),
            buffer: ReplayBuffer::new(config.ddpg.buffer_capacity)?,
            config: config.ddpg.clone(),
            gamma: config.gamma,
            max_grad_norm: config.max_grad_norm,
            noise,
            rng,
            steps: 0,
        })
    }

    pub fn nets(&self) -> &DdpgNets {
        &self.nets
    }
}

impl Agent for DdpgAgent {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ddpg
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous(self.nets.actor.output_dim())
    }

    fn act(&mut self, observation: &[f64]) -> Result<Action> {
        self.steps += 1;
        let mut a = self.nets.actor.forward(observation)?;
        if let Some(noise) = &self.noise {
            for x in &mut a {
                *x = (*x + noise.sample(&mut self.rng)).clamp(0.0, 1.0);
            }
        }
        Ok(Action::Continuous(a))
    }

    fn act_greedy(&self, observation: &[f64]) -> Result<Action> {
        Ok(Action::Continuous(self.nets.actor.forward(observation)?))
    }

    fn observe(&mut self, transition: Transition) -> Result<Option<LearnStats>> {
        let a = transition.action.continuous()?;
        if a.len() != self.nets.actor.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.nets.actor.output_dim(), actual: a.len() });
        }
        self.buffer.push(transition);
        let ready = self.buffer.len() >= self.config.learning_starts.max(self.config.batch_size);
        if ready && self.steps % self.config.train_freq == 0 {
            let batch = self.buffer.sample(self.config.batch_size, &mut self.rng)?;
            let (critic, actor) = ddpg_learn(
                &mut self.nets,
                &mut self.actor_opt,
                &mut self.critic_opt,
                &batch,
                self.gamma,
                self.config.tau,
                self.max_grad_norm,
            )?;
            return Ok(Some(LearnStats { policy_loss: actor, value_loss: critic, entropy: 0.0 }));
        }
        Ok(None)
    }
}
