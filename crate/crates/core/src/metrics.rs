//! Ranking-quality metrics: RPA, NRPA and APFD.
//!
//! All positions are 1-based.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{optimal_ranking, Cycle, Ranking};
use crate::{Error, Result};

/// What a metric value measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Apfd,
    Nrpa,
    Bugs,
    StateCoverage,
    Reward,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Apfd => "apfd",
            MetricKind::Nrpa => "nrpa",
            MetricKind::Bugs => "bugs",
            MetricKind::StateCoverage => "state_coverage",
            MetricKind::Reward => "reward",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "apfd" => MetricKind::Apfd,
            "nrpa" => MetricKind::Nrpa,
            "bugs" => MetricKind::Bugs,
            "state_coverage" => MetricKind::StateCoverage,
            "reward" => MetricKind::Reward,
            other => return Err(Error::InvalidArgument(format!("unknown metric kind {other}"))),
        })
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single observed metric, tagged with the cycle or step it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub kind: MetricKind,
    pub value: f64,
    pub index: u64,
}

fn positions(s: &Ranking) -> HashMap<&str, usize> {
    s.order()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i + 1))
        .collect()
}

/// Rank percentile average of `s` against the reference order `s_o`.
///
/// Each item contributes `(k - idx(s,m) + 1) * (k - idx(s_o,m) + 1)`, the
/// inner sum over `i = idx(s,m)..=k` of a term that does not depend on `i`.
pub fn rpa(s: &Ranking, s_o: &Ranking) -> Result<f64> {
    let k = s.len();
    if k == 0 {
        return Err(Error::MismatchedRankings("empty ranking".into()));
    }
    if s_o.len() != k {
        return Err(Error::MismatchedRankings(format!(
            "lengths differ: {k} vs {}",
            s_o.len()
        )));
    }
    let reference = positions(s_o);
    let mut total = 0.0;
    for (i, id) in s.order().iter().enumerate() {
        let idx_s = i + 1;
        let idx_o = *reference
            .get(id.as_str())
            .ok_or_else(|| Error::MismatchedRankings(format!("{id} missing from reference")))?;
        total += ((k - idx_s + 1) * (k - idx_o + 1)) as f64;
    }
    let k = k as f64;
    Ok(total / (k * k * (k + 1.0) / 2.0))
}

/// `RPA(s_e) / RPA(s_o)`; equals 1 only for `s_e == s_o`.
pub fn nrpa(s_e: &Ranking, s_o: &Ranking) -> Result<f64> {
    Ok(rpa(s_e, s_o)? / rpa(s_o, s_o)?)
}

/// APFD of verdicts listed in ranked order.
pub fn apfd(ranked_verdicts: &[u8]) -> Result<f64> {
    let n = ranked_verdicts.len();
    let m = ranked_verdicts.iter().filter(|&&v| v == 1).count();
    if m == 0 {
        return Err(Error::ApfdUndefined);
    }
    let weighted: usize = ranked_verdicts
        .iter()
        .enumerate()
        .map(|(i, &v)| (i + 1) * usize::from(v))
        .sum();
    let n = n as f64;
    Ok(1.0 - weighted as f64 / (n * m as f64) + 1.0 / (2.0 * n))
}

/// APFD of a ranking over a cycle's verdicts.
pub fn apfd_of(ranking: &Ranking, cycle: &Cycle) -> Result<f64> {
    if !ranking.is_permutation_of(cycle) {
        return Err(Error::MismatchedRankings(
            "ranking is not a permutation of the cycle".into(),
        ));
    }
    apfd(&ranking.verdicts(cycle)?)
}

/// NRPA of a ranking against the cycle's optimal ranking.
pub fn nrpa_of(ranking: &Ranking, cycle: &Cycle) -> Result<f64> {
    nrpa(ranking, &optimal_ranking(cycle)?)
}

/// APFD when the cycle has failures, NRPA otherwise.
pub fn cycle_score(ranking: &Ranking, cycle: &Cycle) -> Result<MetricValue> {
    let (kind, value) = if cycle.failed() {
        (MetricKind::Apfd, apfd_of(ranking, cycle)?)
    } else {
        (MetricKind::Nrpa, nrpa_of(ranking, cycle)?)
    };
    Ok(MetricValue { kind, value, index: cycle.cycle_id })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(ids: &[&str]) -> Ranking {
        Ranking::new(ids.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn rpa_two_items() {
        let o = r(&["a", "b"]);
        assert!((rpa(&o, &o).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!((rpa(&r(&["b", "a"]), &o).unwrap() - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rpa_single_item_is_one() {
        let o = r(&["a"]);
        assert_eq!(rpa(&o, &o).unwrap(), 1.0);
    }

    #[test]
    fn nrpa_examples() {
        let o = r(&["a", "b"]);
        assert_eq!(nrpa(&o, &o).unwrap(), 1.0);
        assert!((nrpa(&r(&["b", "a"]), &o).unwrap() - 0.8).abs() < 1e-15);
        let o3 = r(&["a", "b", "c"]);
        let got = nrpa(&r(&["b", "a", "c"]), &o3).unwrap();
        assert!((got - 13.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_ids_are_rejected() {
        assert!(rpa(&r(&["a", "b"]), &r(&["a", "c"])).is_err());
        assert!(rpa(&r(&["a", "b"]), &r(&["a"])).is_err());
    }

    #[test]
    fn apfd_examples() {
        assert!((apfd(&[1, 1, 0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((apfd(&[0, 1, 1]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((apfd(&[1, 0]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn apfd_refuses_all_pass() {
        assert_eq!(apfd(&[0, 0, 0]).unwrap_err(), Error::ApfdUndefined);
    }

    #[test]
    fn metric_kind_round_trips_through_str() {
        for k in [
            MetricKind::Apfd,
            MetricKind::Nrpa,
            MetricKind::Bugs,
            MetricKind::StateCoverage,
            MetricKind::Reward,
        ] {
            assert_eq!(k.as_str().parse::<MetricKind>().unwrap(), k);
        }
    }
}
