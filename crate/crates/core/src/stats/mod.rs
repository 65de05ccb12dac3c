//! Statistical comparison of configurations: Welch's ANOVA, the
//! Games-Howell post-hoc procedure and the common-language effect size.

pub mod quadrature;
pub mod special;
pub mod studentized_range;

use serde::{Deserialize, Serialize};

pub use special::regularized_incomplete_beta;
pub use studentized_range::studentized_range_sf;

use crate::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Mean, unbiased variance and size of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl Summary {
    pub fn of(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        let n = sample.len();
        let mean = sample.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Ok(Self { n, mean, variance })
    }
}

fn summaries(groups: &[Vec<f64>]) -> Result<Vec<Summary>> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            if g.len() < 2 {
                return Err(Error::DegenerateGroup(format!("group {i} has fewer than 2 values")));
            }
            let s = Summary::of(g)?;
            if !(s.variance > 0.0) {
                return Err(Error::DegenerateGroup(format!("group {i} has zero variance")));
            }
            Ok(s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchAnova {
    pub f: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
}

/// Welch's heteroscedastic one-way ANOVA.
pub fn welch_anova(groups: &[Vec<f64>]) -> Result<WelchAnova> {
    let s = summaries(groups)?;
    let k = s.len() as f64;
    let weights: Vec<f64> = s.iter().map(|g| g.n as f64 / g.variance).collect();
    let total: f64 = weights.iter().sum();
    let grand = s.iter().zip(&weights).map(|(g, w)| w * g.mean).sum::<f64>() / total;
    let between = s
        .iter()
        .zip(&weights)
        .map(|(g, w)| w * (g.mean - grand).powi(2))
        .sum::<f64>()
        / (k - 1.0);
    let lambda: f64 = s
        .iter()
        .zip(&weights)
        .map(|(g, w)| (1.0 - w / total).powi(2) / (g.n as f64 - 1.0))
        .sum();
    let f = between / (1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * lambda);
    let df1 = k - 1.0;
    let df2 = (k * k - 1.0) / (3.0 * lambda);
    let p = special::f_sf(f, df1, df2).clamp(0.0, 1.0);
    Ok(WelchAnova { f, df1, df2, p })
}

/// One row of the Games-Howell table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub a: usize,
    pub b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub significant: bool,
}

/// Games-Howell comparisons for every unordered pair `(a, b)`, `a < b`.
pub fn games_howell(groups: &[Vec<f64>]) -> Result<Vec<PairwiseComparison>> {
    let s = summaries(groups)?;
    let k = s.len();
    let mut rows = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            let (ga, gb) = (s[a], s[b]);
            let va = ga.variance / ga.n as f64;
            let vb = gb.variance / gb.n as f64;
            let t = (ga.mean - gb.mean) / (va + vb).sqrt();
            let df = (va + vb).powi(2)
                / (va * va / (ga.n as f64 - 1.0) + vb * vb / (gb.n as f64 - 1.0));
            let p = studentized_range_sf(t.abs() * std::f64::consts::SQRT_2, k, df)?;
            rows.push(PairwiseComparison {
                a,
                b,
                mean_a: ga.mean,
                mean_b: gb.mean,
                t,
                df,
                p,
                significant: p <= SIGNIFICANCE_LEVEL,
            });
        }
    }
    Ok(rows)
}

/// Probability that a draw from `a` exceeds a draw from `b`, ties counting half.
pub fn cle(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("CLE needs two non-empty samples".into()));
    }
    let mut wins = 0.0;
    for x in a {
        for y in b {
            if x > y {
                wins += 1.0;
            } else if x == y {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (a.len() * b.len()) as f64)
}

/// Omnibus test, post-hoc table and CLE matrix for named groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub anova: WelchAnova,
    pub pairs: Vec<PairwiseComparison>,
    /// `cle[i][j]` = CLE(group i, group j).
    pub cle: Vec<Vec<f64>>,
}

impl StatReport {
    pub fn compute(names: Vec<String>, groups: &[Vec<f64>]) -> Result<Self> {
        if names.len() != groups.len() {
            return Err(Error::DimensionMismatch {
                expected: groups.len(),
                actual: names.len(),
            });
        }
        let anova = welch_anova(groups)?;
        let pairs = games_howell(groups)?;
        let means = groups
            .iter()
            .map(|g| Summary::of(g).map(|s| s.mean))
            .collect::<Result<_>>()?;
        let cle = groups
            .iter()
            .map(|a| groups.iter().map(|b| cle(a, b)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(Self { names, means, anova, pairs, cle })
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairwiseComparison> {
        let ia = self.names.iter().position(|n| n == a)?;
        let ib = self.names.iter().position(|n| n == b)?;
        let (lo, hi) = (ia.min(ib), ia.max(ib));
        self.pairs.iter().find(|p| p.a == lo && p.b == hi)
    }
}
