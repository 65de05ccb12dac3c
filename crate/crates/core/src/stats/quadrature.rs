//! Gauss-Legendre quadrature with adaptive interval splitting.

use std::sync::OnceLock;

use crate::{Error, Result};

pub const GL_ORDER: usize = 32;
const MAX_DEPTH: u32 = 40;

/// Nodes and weights on `[-1, 1]`, found by Newton iteration on `P_n`.
fn rule() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let j = j as f64;
                    let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// Fixed 32-point rule on `[a, b]`.
pub fn gauss_legendre<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<f64> {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by bisecting
/// panels whose one- and two-panel estimates disagree.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let whole = gauss_legendre(&mut f, a, b)?;
    refine(&mut f, a, b, whole, tol, 0)
}

fn refine<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = gauss_legendre(f, a, m)?;
    let right = gauss_legendre(f, m, b)?;
    let both = left + right;
    if (both - whole).abs() <= tol {
        return Ok(both);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NonConvergence(format!(
            "panel [{a}, {b}] failed to reach tolerance {tol}"
        )));
    }
    Ok(refine(f, a, m, left, tol / 2.0, depth + 1)? + refine(f, m, b, right, tol / 2.0, depth + 1)?)
}
