//! Losses returning `(value, d value / d input)`.

use ndarray::Array2;

use crate::{Error, Result};

/// Mean squared error over paired predictions and targets.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::DimensionMismatch { expected: pred.len(), actual: target.len() });
    }
    let n = pred.len() as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    Ok((loss, grad))
}

/// MSE between `q[i, actions[i]]` and `targets[i]`; other entries get no gradient.
pub fn mse_selected(q: &Array2<f64>, actions: &[usize], targets: &[f64]) -> Result<(f64, Array2<f64>)> {
    let (batch, width) = q.dim();
    if actions.len() != batch || targets.len() != batch {
        return Err(Error::DimensionMismatch { expected: batch, actual: actions.len() });
    }
    if let Some(&a) = actions.iter().find(|&&a| a >= width) {
        return Err(Error::InvalidArgument(format!("action {a} out of range {width}")));
    }
    let selected: Vec<f64> = actions.iter().enumerate().map(|(i, &a)| q[[i, a]]).collect();
    let (loss, g) = mse(&selected, targets)?;
    let mut grad = Array2::zeros((batch, width));
    for (i, &a) in actions.iter().enumerate() {
        grad[[i, a]] = g[i];
    }
    Ok((loss, grad))
}

/// Row-wise log-softmax.
pub fn log_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// Mean categorical cross-entropy of softmax(logits) against integer labels.
pub fn cross_entropy_with_logits(logits: &Array2<f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (batch, width) = logits.dim();
    if labels.len() != batch {
        return Err(Error::DimensionMismatch { expected: batch, actual: labels.len() });
    }
    let logp = log_softmax(logits);
    let n = batch as f64;
    let mut loss = 0.0;
    let mut grad = logp.mapv(f64::exp) / n;
    for (i, &y) in labels.iter().enumerate() {
        if y >= width {
            return Err(Error::InvalidArgument(format!("label {y} out of range {width}")));
        }
        loss -= logp[[i, y]];
        grad[[i, y]] -= 1.0 / n;
    }
    Ok((loss / n, grad))
}

/// Clipped surrogate `-mean(min(ρA, clip(ρ, 1-c, 1+c) A))` with `ρ = exp(logp - logp_old)`.
///
/// The gradient is taken with respect to `logp`.
pub fn clipped_surrogate(
    logp: &[f64],
    logp_old: &[f64],
    advantages: &[f64],
    clip: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = logp.len();
    if logp_old.len() != n || advantages.len() != n || n == 0 {
        return Err(Error::DimensionMismatch { expected: n, actual: advantages.len() });
    }
    let nf = n as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let ratio = (logp[i] - logp_old[i]).exp();
        let a = advantages[i];
        let unclipped = ratio * a;
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * a;
        if unclipped <= clipped {
            loss -= unclipped / nf;
            grad[i] = -unclipped / nf;
        } else {
            loss -= clipped / nf;
        }
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn mse_selected_masks_other_actions() {
        let q = array![[1.0, 2.0], [0.0, -1.0]];
        let (loss, g) = mse_selected(&q, &[1, 0], &[3.0, 0.0]).unwrap();
        assert!((loss - 0.5).abs() < 1e-15);
        assert_eq!(g, array![[0.0, -1.0], [0.0, 0.0]]);
    }

    #[test]
    fn cross_entropy_of_uniform_logits() {
        let (loss, _) = cross_entropy_with_logits(&Array2::zeros((2, 4)), &[0, 3]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn surrogate_at_unit_ratio_is_negative_mean_advantage() {
        let lp = [-0.3, -1.2, -0.7];
        let adv = [1.0, -2.0, 0.5];
        let (loss, _) = clipped_surrogate(&lp, &lp, &adv, 0.2).unwrap();
        assert!((loss + (1.0 - 2.0 + 0.5) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn saturated_clip_has_no_gradient() {
        // ρ = e^0.5 > 1.2 with positive advantage: the clipped branch wins.
        let (_, g) = clipped_surrogate(&[0.0], &[-0.5], &[2.0], 0.2).unwrap();
        assert_eq!(g, vec![0.0]);
        // Negative advantage with ρ below 1 - c also saturates.
        let (_, g) = clipped_surrogate(&[-0.5], &[0.0], &[-1.0], 0.2).unwrap();
        assert_eq!(g, vec![0.0]);
    }
}
