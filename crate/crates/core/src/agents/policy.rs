//! Stochastic policy heads and the state-value critic shared by A2C and PPO.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{clip_global_norm, Action, ActionSpace, AgentConfig};
use crate::neural::{AdamState, ForwardCache, Gradients, Mlp, OutputActivation};
use crate::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone)]
enum Head {
    /// Network emits logits.
    Categorical,
    /// Network emits the mean through a sigmoid; `log_std` is state-independent.
    Gaussian { log_std: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct StochasticPolicy {
    net: Mlp,
    head: Head,
    net_opt: AdamState,
    std_opt: AdamState,
}

/// Forward pass over a batch, with per-sample log-probabilities and entropies.
#[derive(Debug, Clone)]
pub struct PolicyEval {
    cache: ForwardCache,
    /// Row-wise softmax (categorical) or the means (Gaussian).
    dist: Array2<f64>,
    actions: Vec<Action>,
    pub logp: Vec<f64>,
    pub entropy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGradients {
    pub net: Gradients,
    pub log_std: Vec<f64>,
}

fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

fn log_softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl StochasticPolicy {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        space: ActionSpace,
        config: &AgentConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let (net, head) = match space {
            ActionSpace::Discrete(n) => {
                if n < 2 {
                    return Err(Error::InvalidArgument("need at least two discrete actions".into()));
                }
                let sizes = config.layer_sizes(obs_dim, n);
                (Mlp::new(&sizes, OutputActivation::Identity, rng)?, Head::Categorical)
            }
            ActionSpace::Continuous(d) => {
                if d == 0 {
                    return Err(Error::InvalidArgument("continuous action dimension must be positive".into()));
                }
                let sizes = config.layer_sizes(obs_dim, d);
                (
                    Mlp::new(&sizes, OutputActivation::Sigmoid, rng)?,
                    Head::Gaussian { log_std: vec![config.log_std_init; d] },
                )
            }
        };
        Ok(Self {
            net,
            head,
            net_opt: AdamState::new(config.adam()),
            std_opt: AdamState::new(config.adam()),
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn log_std(&self) -> Option<&[f64]> {
        match &self.head {
            Head::Gaussian { log_std } => Some(log_std),
            Head::Categorical => None,
        }
    }

    pub fn log_std_mut(&mut self) -> Option<&mut [f64]> {
        match &mut self.head {
            Head::Gaussian { log_std } => Some(log_std),
            Head::Categorical => None,
        }
    }

    /// Draws an action and its log-probability. Gaussian samples are
    /// returned unclipped.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(Action, f64)> {
        let out = self.net.forward(obs)?;
        match &self.head {
            Head::Categorical => {
                let p = softmax_row(&out);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut a = p.len() - 1;
                for (i, pi) in p.iter().enumerate() {
                    acc += pi;
                    if u < acc {
                        a = i;
                        break;
                    }
                }
                Ok((Action::Discrete(a), log_softmax_row(&out)[a]))
            }
            Head::Gaussian { log_std } => {
                let mut action = Vec::with_capacity(out.len());
                let mut logp = 0.0;
                for (mu, ls) in out.iter().zip(log_std) {
                    let z: f64 = StandardNormal.sample(rng);
                    action.push(mu + ls.exp() * z);
                    logp += -0.5 * z * z - ls - HALF_LN_2PI;
                }
                Ok((Action::Continuous(action), logp))
            }
        }
    }

    /// Most likely action: argmax of the logits, or the mean.
    pub fn greedy(&self, obs: &[f64]) -> Result<Action> {
        let out = self.net.forward(obs)?;
        Ok(match self.head {
            Head::Categorical => Action::Discrete(argmax(&out)),
            Head::Gaussian { .. } => Action::Continuous(out),
        })
    }

    pub fn evaluate(&self, states: Array2<f64>, actions: &[Action]) -> Result<PolicyEval> {
        if states.nrows() != actions.len() {
            return Err(Error::DimensionMismatch { expected: states.nrows(), actual: actions.len() });
        }
        let cache = self.net.forward_cached(states)?;
        let out = cache.output();
        let n = actions.len();
        let mut logp = Vec::with_capacity(n);
        let mut entropy = Vec::with_capacity(n);
        let dist = match &self.head {
            Head::Categorical => {
                let mut probs = out.clone();
                for (i, (row, a)) in out.rows().into_iter().zip(actions).enumerate() {
                    let a = a.discrete()?;
                    if a >= row.len() {
                        return Err(Error::InvalidArgument(format!("action {a} out of range")));
                    }
                    let logits = row.to_vec();
                    let lp = log_softmax_row(&logits);
                    let p = softmax_row(&logits);
                    logp.push(lp[a]);
                    entropy.push(-p.iter().zip(&lp).map(|(p, l)| p * l).sum::<f64>());
                    probs.row_mut(i).assign(&ndarray::Array1::from(p));
                }
                probs
            }
            Head::Gaussian { log_std } => {
                let h_const: f64 = log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum();
                for (row, a) in out.rows().into_iter().zip(actions) {
                    let a = a.continuous()?;
                    if a.len() != log_std.len() {
                        return Err(Error::DimensionMismatch { expected: log_std.len(), actual: a.len() });
                    }
                    let mut lp = 0.0;
                    for ((mu, x), ls) in row.iter().zip(a).zip(log_std) {
                        let z = (x - mu) / ls.exp();
                        lp += -0.5 * z * z - ls - HALF_LN_2PI;
                    }
                    logp.push(lp);
                    entropy.push(h_const);
                }
                out.clone()
            }
        };
        Ok(PolicyEval { cache, dist, actions: actions.to_vec(), logp, entropy })
    }

    /// Gradient of `Σ dlogp_i · logp_i + Σ dentropy_i · H_i`.
    pub fn gradients(&self, eval: &PolicyEval, dlogp: &[f64], dentropy: &[f64]) -> Result<PolicyGradients> {
        let n = eval.actions.len();
        if dlogp.len() != n || dentropy.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: dlogp.len() });
        }
        let mut upstream = Array2::zeros(eval.dist.dim());
        let mut log_std_grad = Vec::new();
        match &self.head {
            Head::Categorical => {
                for i in 0..n {
                    let a = eval.actions[i].discrete()?;
                    let p = eval.dist.row(i);
                    let h = eval.entropy[i];
                    for j in 0..p.len() {
                        let onehot = if j == a { 1.0 } else { 0.0 };
                        let lp = p[j].max(f64::MIN_POSITIVE).ln();
                        upstream[[i, j]] = dlogp[i] * (onehot - p[j]) - dentropy[i] * p[j] * (lp + h);
                    }
                }
            }
            Head::Gaussian { log_std } => {
                log_std_grad = vec![0.0; log_std.len()];
                for i in 0..n {
                    let a = eval.actions[i].continuous()?;
                    for (d, ls) in log_std.iter().enumerate() {
                        let var = (2.0 * ls).exp();
                        let diff = a[d] - eval.dist[[i, d]];
                        upstream[[i, d]] = dlogp[i] * diff / var;
                        log_std_grad[d] += dlogp[i] * (diff * diff / var - 1.0) + dentropy[i];
                    }
                }
            }
        }
        // For the Gaussian head, backward applies the sigmoid Jacobian.
        let net = self.net.backward(&eval.cache, &upstream)?;
        Ok(PolicyGradients { net, log_std: log_std_grad })
    }

    /// One Adam step on the loss whose partials are `dlogp` and `dentropy`.
    pub fn apply(&mut self, eval: &PolicyEval, dlogp: &[f64], dentropy: &[f64], max_grad_norm: Option<f64>) -> Result<()> {
        let mut g = self.gradients(eval, dlogp, dentropy)?;
        {
            let mut slices = g.net.slices_mut();
            slices.push(&mut g.log_std);
            clip_global_norm(&mut slices, max_grad_norm);
        }
        self.net_opt.step_mlp(&mut self.net, &g.net)?;
        if let Head::Gaussian { log_std } = &mut self.head {
            self.std_opt.step(vec![log_std.as_mut_slice()], vec![g.log_std.as_slice()])?;
        }
        if !self.net.all_finite() {
            return Err(Error::Divergence("policy parameters became non-finite".into()));
        }
        Ok(())
    }
}

/// State-value network `V(s)` with its own optimizer.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    net: Mlp,
    opt: AdamState,
}

impl ValueFunction {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, config: &AgentConfig, rng: &mut R) -> Result<Self> {
        let sizes = config.layer_sizes(obs_dim, 1);
        Ok(Self { net: Mlp::new(&sizes, OutputActivation::Identity, rng)?, opt: AdamState::new(config.adam()) })
    }

    pub fn from_net(net: Mlp, config: &AgentConfig) -> Result<Self> {
        if net.output_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, actual: net.output_dim() });
        }
        Ok(Self { net, opt: AdamState::new(config.adam()) })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.net.forward(obs)?[0])
    }

    pub fn values(&self, states: &Array2<f64>) -> Result<Vec<f64>> {
        Ok(self.net.forward_batch(states.view())?.index_axis(Axis(1), 0).to_vec())
    }

    /// One Adam step on `coef · mean((V(s) - target)²)`; returns the unscaled MSE.
    pub fn fit(&mut self, states: Array2<f64>, targets: &[f64], coef: f64, max_grad_norm: Option<f64>) -> Result<f64> {
        let n = targets.len();
        if states.nrows() != n || n == 0 {
            return Err(Error::DimensionMismatch { expected: states.nrows(), actual: n });
        }
        let cache = self.net.forward_cached(states)?;
        let v = cache.output();
        let mut upstream = Array2::zeros((n, 1));
        let mut loss = 0.0;
        for i in 0..n {
            let d = v[[i, 0]] - targets[i];
            loss += d * d / n as f64;
            upstream[[i, 0]] = coef * 2.0 * d / n as f64;
        }
        let mut g = self.net.backward(&cache, &upstream)?;
        clip_global_norm(&mut g.slices_mut(), max_grad_norm);
        self.opt.step_mlp(&mut self.net, &g)?;
        if !self.net.all_finite() {
            return Err(Error::Divergence("value parameters became non-finite".into()));
        }
        Ok(loss)
    }
}

/// Gaussian log-density of `x` around `mu` with log standard deviation `log_std`.
pub fn gaussian_log_prob(x: &[f64], mu: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mu)
        .zip(log_std)
        .map(|((x, m), ls)| {
            let var = (2.0 * ls).exp();
            -(x - m).powi(2) / (2.0 * var) - 0.5 * (2.0 * PI * var).ln()
        })
        .sum()
}
