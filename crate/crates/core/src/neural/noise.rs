use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::{Error, Result};

/// Exploration by perturbing every trainable parameter with `N(0, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParamNoise {
    pub sigma: f64,
}

impl Default for GaussianParamNoise {
    fn default() -> Self {
        Self { sigma: 0.5 }
    }
}

impl GaussianParamNoise {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma })
    }
}

/// Returns a perturbed copy of `net`; `net` itself is untouched.
pub fn apply_param_noise<R: Rng + ?Sized>(net: &Mlp, noise: GaussianParamNoise, rng: &mut R) -> Mlp {
    let mut copy = net.clone();
    perturb_into(&mut copy, net, noise, rng);
    copy
}

/// Overwrites `dst` with `src` plus fresh noise, reusing `dst`'s buffers.
pub fn perturb_into<R: Rng + ?Sized>(dst: &mut Mlp, src: &Mlp, noise: GaussianParamNoise, rng: &mut R) {
    if noise.sigma == 0.0 {
        dst.clone_from(src);
        return;
    }
    let normal = Normal::new(0.0, noise.sigma).expect("sigma validated non-negative");
    for (d, s) in dst.param_slices_mut().into_iter().zip(src.param_slices()) {
        for (x, y) in d.iter_mut().zip(s) {
            *x = y + normal.sample(rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::OutputActivation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net() -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        Mlp::new(&[2, 128, 128, 4], OutputActivation::Identity, &mut rng).unwrap()
    }

    #[test]
    fn zero_sigma_copies_exactly() {
        let n = net();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(apply_param_noise(&n, GaussianParamNoise::new(0.0).unwrap(), &mut rng), n);
    }

    #[test]
    fn perturbation_has_requested_spread() {
        let n = net();
        assert!(n.num_params() >= 10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = apply_param_noise(&n, GaussianParamNoise::default(), &mut rng);
        let diffs: Vec<f64> = p
            .param_slices()
            .iter()
            .zip(n.param_slices())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
        assert!((sd - 0.5).abs() < 0.025, "sd = {sd}");
    }

    #[test]
    fn same_seed_same_noise() {
        let n = net();
        let a = apply_param_noise(&n, GaussianParamNoise::default(), &mut ChaCha8Rng::seed_from_u64(4));
        let b = apply_param_noise(&n, GaussianParamNoise::default(), &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert_ne!(a, n);
    }

    #[test]
    fn negative_sigma_is_rejected() {
        assert!(GaussianParamNoise::new(-0.1).is_err());
    }
}
