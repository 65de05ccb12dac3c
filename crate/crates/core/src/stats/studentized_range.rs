//! Survival function of the studentized range distribution.
//!
//! `P(Q <= q) = ∫ g(s) W(q s) ds` where `g` is the density of
//! `sqrt(chi2_df / df)` and `W(w) = k ∫ φ(z) [Φ(z) - Φ(z - w)]^(k-1) dz` is the
//! CDF of the range of `k` standard normals. Both integrals use adaptive
//! Gauss-Legendre panels.

use super::quadrature::integrate;
use super::special::{ln_gamma, normal_cdf, normal_pdf};
use crate::{Error, Result};

const Z_LIMIT: f64 = 8.5;
const INNER_PANELS: usize = 8;
const OUTER_PANELS: usize = 16;
const INNER_TOL: f64 = 1e-9;
const OUTER_TOL: f64 = 1e-7;
/// Above this many degrees of freedom the `s` density is treated as a point mass.
const DF_INFINITE: f64 = 1e5;

/// CDF of the range of `k` i.i.d. standard normals.
pub fn normal_range_cdf(w: f64, k: usize) -> Result<f64> {
    if w <= 0.0 {
        return Ok(0.0);
    }
    let km1 = (k - 1) as i32;
    let step = 2.0 * Z_LIMIT / INNER_PANELS as f64;
    let mut total = 0.0;
    for p in 0..INNER_PANELS {
        let a = -Z_LIMIT + p as f64 * step;
        total += integrate(
            |z| Ok(normal_pdf(z) * (normal_cdf(z) - normal_cdf(z - w)).max(0.0).powi(km1)),
            a,
            a + step,
            INNER_TOL / INNER_PANELS as f64,
        )?;
    }
    Ok((k as f64 * total).clamp(0.0, 1.0))
}

/// `P(Q > q)` for the studentized range with `k` groups and `df` degrees of freedom.
pub fn studentized_range_sf(q: f64, k: usize, df: f64) -> Result<f64> {
    if q.is_nan() {
        return Err(Error::InvalidArgument(format!("q must be a number, got {q}")));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    if !(df > 0.0) {
        return Err(Error::InvalidArgument(format!("df must be > 0, got {df}")));
    }
    if q <= 0.0 {
        return Ok(1.0);
    }
    if q == f64::INFINITY {
        return Ok(0.0);
    }
    if df >= DF_INFINITE {
        return Ok((1.0 - normal_range_cdf(q, k)?).clamp(0.0, 1.0));
    }

    // s = sqrt(chi2/df): mean near 1, spread about 1/sqrt(2 df).
    let spread = (1.0 / (2.0 * df)).sqrt();
    let lo = (1.0 - 14.0 * spread).max(0.0);
    let hi = 1.0 + 14.0 * spread.max(0.25) + if df < 4.0 { 10.0 / df } else { 0.0 };
    let half = df / 2.0;
    let ln_norm = half * df.ln() - ln_gamma(half) - (half - 1.0) * std::f64::consts::LN_2;
    let density = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        (ln_norm + (df - 1.0) * s.ln() - half * s * s).exp()
    };

    let step = (hi - lo) / OUTER_PANELS as f64;
    let mut sf = 0.0;
    for p in 0..OUTER_PANELS {
        let a = lo + p as f64 * step;
        sf += integrate(
            |s| {
                let g = density(s);
                if g < 1e-300 {
                    return Ok(0.0);
                }
                Ok(g * (1.0 - normal_range_cdf(q * s, k)?))
            },
            a,
            a + step,
            OUTER_TOL / OUTER_PANELS as f64,
        )?;
    }
    Ok(sf.clamp(0.0, 1.0))
}
