//! Agents behind a common observe → act → learn interface.
//!
//! | algorithm | family        | actions             |
//! |-----------|---------------|---------------------|
//! | DQN       | value, off    | discrete            |
//! | A2C       | actor-critic  | discrete/continuous |
//! | PPO       | actor-critic  | discrete/continuous |
//! | DDPG      | policy, off   | continuous          |
//!
//! Continuous actions live in `[0, 1]^d`.

pub mod a2c;
pub mod ddpg;
pub mod dqn;
pub mod policy;
pub mod ppo;
pub mod replay;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use a2c::A2cAgent;
pub use ddpg::DdpgAgent;
pub use dqn::DqnAgent;
pub use ppo::PpoAgent;
pub use replay::ReplayBuffer;

use crate::neural::{AdamConfig, DEFAULT_HIDDEN, DEFAULT_LEARNING_RATE};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dqn,
    A2c,
    Ppo,
    Ddpg,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Dqn => "dqn",
            Algorithm::A2c => "a2c",
            Algorithm::Ppo => "ppo",
            Algorithm::Ddpg => "ddpg",
        }
    }

    pub fn supports(self, space: ActionSpace) -> bool {
        match (self, space) {
            (Algorithm::Dqn, ActionSpace::Discrete(_)) => true,
            (Algorithm::Ddpg, ActionSpace::Continuous(_)) => true,
            (Algorithm::A2c | Algorithm::Ppo, _) => true,
            _ => false,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionSpace {
    /// `n` choices, `0..n`.
    Discrete(usize),
    /// Vectors of this many components in `[0, 1]`.
    Continuous(usize),
}

impl ActionSpace {
    pub fn is_discrete(self) -> bool {
        matches!(self, ActionSpace::Discrete(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn discrete(&self) -> Result<usize> {
        match self {
            Action::Discrete(a) => Ok(*a),
            Action::Continuous(_) => Err(Error::InvalidArgument("expected a discrete action".into())),
        }
    }

    pub fn continuous(&self) -> Result<&[f64]> {
        match self {
            Action::Continuous(v) => Ok(v),
            Action::Discrete(_) => Err(Error::InvalidArgument("expected a continuous action".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Losses from one learning update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

pub trait Agent: Send {
    fn algorithm(&self) -> Algorithm;

    fn action_space(&self) -> ActionSpace;

    /// Action for training, including exploration.
    fn act(&mut self, observation: &[f64]) -> Result<Action>;

    /// Action for evaluation, without exploration.
    fn act_greedy(&self, observation: &[f64]) -> Result<Action>;

    /// Feeds back the outcome of the last `act`; may trigger a learning update.
    fn observe(&mut self, transition: Transition) -> Result<Option<LearnStats>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of the training horizon over which epsilon is annealed linearly.
    pub exploration_fraction: f64,
    /// Hard target copy every this many learning updates.
    pub target_update_interval: u64,
    pub learning_starts: usize,
    /// Environment steps between learning updates.
    pub train_freq: u64,
    /// Gaussian parameter-noise sigma; `None` disables it.
    pub param_noise: Option<f64>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            buffer_capacity: 50_000,
            batch_size: 32,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            exploration_fraction: 0.1,
            target_update_interval: 250,
            learning_starts: 1_000,
            train_freq: 4,
            param_noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct A2cConfig {
    pub n_step: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Gradient passes over each n-step batch.
    pub epochs: usize,
}

impl Default for A2cConfig {
    fn default() -> Self {
        Self { n_step: 32, entropy_coef: 0.01, value_coef: 0.5, epochs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub rollout_len: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub clip_range: f64,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            rollout_len: 2048,
            epochs: 4,
            minibatch_size: 64,
            clip_range: 0.2,
            gae_lambda: 0.95,
            entropy_coef: 0.01,
            value_coef: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgConfig {
    pub tau: f64,
    pub action_noise: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub learning_starts: usize,
    pub train_freq: u64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            tau: 0.005,
            action_noise: 0.1,
            buffer_capacity: 50_000,
            batch_size: 32,
            learning_starts: 100,
            train_freq: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub lr: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Planned number of training steps; schedules are laid out over it.
    pub horizon: u64,
    /// Global gradient-norm clip for actor-critic updates.
    pub max_grad_norm: Option<f64>,
    /// Initial log standard deviation of Gaussian policy heads.
    pub log_std_init: f64,
    pub dqn: DqnConfig,
    pub a2c: A2cConfig,
    pub ppo: PpoConfig,
    pub ddpg: DdpgConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Dqn,
            gamma: 0.99,
            lr: DEFAULT_LEARNING_RATE,
            hidden: DEFAULT_HIDDEN.to_vec(),
            seed: 0,
            horizon: 100_000,
            max_grad_norm: Some(0.5),
            log_std_init: -1.0,
            dqn: DqnConfig::default(),
            a2c: A2cConfig::default(),
            ppo: PpoConfig::default(),
            ddpg: DdpgConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Self::default() }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.lr)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        if !(self.ppo.clip_range > 0.0) {
            return bad(format!("clip range {} must be positive", self.ppo.clip_range));
        }
        if !(self.ddpg.tau > 0.0 && self.ddpg.tau <= 1.0) {
            return bad(format!("tau {} outside (0, 1]", self.ddpg.tau));
        }
        if !(0.0..=1.0).contains(&self.dqn.exploration_fraction) {
            return bad(format!("exploration fraction {} outside [0, 1]", self.dqn.exploration_fraction));
        }
        if !(0.0..=1.0).contains(&self.dqn.epsilon_start) || !(0.0..=1.0).contains(&self.dqn.epsilon_end) {
            return bad("epsilon bounds must lie in [0, 1]".into());
        }
        if self.dqn.batch_size == 0 || self.ddpg.batch_size == 0 || self.ppo.minibatch_size == 0 {
            return bad("batch sizes must be positive".into());
        }
        if self.dqn.buffer_capacity == 0 || self.ddpg.buffer_capacity == 0 {
            return bad("buffer capacities must be positive".into());
        }
        if self.a2c.n_step == 0 || self.ppo.rollout_len == 0 {
            return bad("rollout lengths must be positive".into());
        }
        if self.dqn.train_freq == 0 || self.ddpg.train_freq == 0 || self.dqn.target_update_interval == 0 {
            return bad("update intervals must be positive".into());
        }
        if let Some(s) = self.dqn.param_noise {
            if !(s >= 0.0) {
                return bad(format!("parameter noise sigma {s} must be >= 0"));
            }
        }
        Ok(())
    }

    /// Layer sizes `[input, hidden..., output]`.
    pub fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(input);
        sizes.extend(&self.hidden);
        sizes.push(output);
        sizes
    }
}

/// Builds the configured agent, rejecting unsupported action spaces.
pub fn build_agent(config: &AgentConfig, obs_dim: usize, space: ActionSpace) -> Result<Box<dyn Agent>> {
    config.validate()?;
    if !config.algorithm.supports(space) {
        return Err(Error::InvalidArgument(format!(
            "{} does not support {space:?} actions",
            config.algorithm
        )));
    }
    Ok(match config.algorithm {
        Algorithm::Dqn => {
            let ActionSpace::Discrete(n) = space else { unreachable!("checked by supports") };
            Box::new(DqnAgent::new(config, obs_dim, n)?)
        }
        Algorithm::A2c => Box::new(A2cAgent::new(config, obs_dim, space)?),
        Algorithm::Ppo => Box::new(PpoAgent::new(config, obs_dim, space)?),
        Algorithm::Ddpg => {
            let ActionSpace::Continuous(d) = space else { unreachable!("checked by supports") };
            Box::new(DdpgAgent::new(config, obs_dim, d)?)
        }
    })
}

pub(crate) fn stack_rows<'a, I>(rows: I, width: usize) -> Result<Array2<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut flat = Vec::new();
    let mut n = 0;
    for r in rows {
        if r.len() != width {
            return Err(Error::DimensionMismatch { expected: width, actual: r.len() });
        }
        flat.extend_from_slice(r);
        n += 1;
    }
    Array2::from_shape_vec((n, width), flat).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Scales gradient slices so their joint L2 norm is at most `max_norm`.
pub(crate) fn clip_global_norm(slices: &mut [&mut [f64]], max_norm: Option<f64>) {
    let Some(max_norm) = max_norm else { return };
    let norm = slices
        .iter()
        .flat_map(|s| s.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for s in slices.iter_mut() {
            s.iter_mut().for_each(|g| *g *= scale);
        }
    }
}
