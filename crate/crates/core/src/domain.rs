//! Shared domain types for the CI prioritization task, the optimal-ranking
//! oracle and the per-cycle training budget.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default length of the verdict-history window.
pub const DEFAULT_HISTORY_WINDOW: usize = 4;

/// Number of features derived from execution history alone.
pub const SIMPLE_FEATURES: usize = 4;

/// One execution-history row of a test case in a CI cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCaseRecord {
    pub test_id: String,
    pub cycle_id: u64,
    /// 0 = pass, 1 = fail.
    pub verdict: u8,
    /// Seconds.
    pub duration: f64,
    /// Cycles since the test first appeared.
    pub age: u64,
    /// Prior verdicts, most recent last.
    pub verdict_history: Vec<u8>,
    /// Code-based features, present only in enriched datasets.
    pub enriched: Option<Vec<f64>>,
}

impl TestCaseRecord {
    pub fn validate(&self) -> Result<()> {
        if self.verdict > 1 {
            return Err(Error::InvalidArgument(format!(
                "verdict of {} must be 0 or 1",
                self.test_id
            )));
        }
        if self.verdict_history.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument(format!(
                "verdict history of {} must contain only 0/1",
                self.test_id
            )));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "duration of {} must be finite and non-negative",
                self.test_id
            )));
        }
        if let Some(extra) = &self.enriched {
            if extra.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "enriched features of {} must be finite",
                    self.test_id
                )));
            }
        }
        Ok(())
    }

    pub fn failed(&self) -> bool {
        self.verdict == 1
    }
}

/// The set of test cases executed in one CI build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub cycle_id: u64,
    tests: Vec<TestCaseRecord>,
}

impl Cycle {
    /// Builds a cycle, rejecting empty input, duplicate ids and invalid rows.
    pub fn new(cycle_id: u64, tests: Vec<TestCaseRecord>) -> Result<Self> {
        if tests.is_empty() {
            return Err(Error::EmptyCycle);
        }
        let mut seen = BTreeSet::new();
        for t in &tests {
            t.validate()?;
            if !seen.insert(t.test_id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate test id {} in cycle {cycle_id}",
                    t.test_id
                )));
            }
        }
        let width = tests[0].enriched.as_ref().map(Vec::len);
        if tests.iter().any(|t| t.enriched.as_ref().map(Vec::len) != width) {
            return Err(Error::InvalidArgument(format!(
                "inconsistent enriched feature width in cycle {cycle_id}"
            )));
        }
        Ok(Self { cycle_id, tests })
    }

    pub fn tests(&self) -> &[TestCaseRecord] {
        &self.tests
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    /// True iff at least one test failed.
    pub fn failed(&self) -> bool {
        self.tests.iter().any(TestCaseRecord::failed)
    }

    pub fn failure_count(&self) -> usize {
        self.tests.iter().filter(|t| t.failed()).count()
    }

    pub fn position_of(&self, test_id: &str) -> Option<usize> {
        self.tests.iter().position(|t| t.test_id == test_id)
    }

    pub fn get(&self, test_id: &str) -> Option<&TestCaseRecord> {
        self.tests.iter().find(|t| t.test_id == test_id)
    }

    /// Length of the per-test feature vector for this cycle.
    pub fn feature_dim(&self) -> usize {
        SIMPLE_FEATURES + self.tests[0].enriched.as_ref().map_or(0, Vec::len)
    }
}

/// An ordered permutation of one cycle's test ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ranking {
    order: Vec<String>,
}

impl Ranking {
    /// Wraps an order, rejecting duplicates.
    pub fn new(order: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for id in &order {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate id {id} in ranking")));
            }
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// True iff this ranking is a permutation of exactly the cycle's ids.
    pub fn is_permutation_of(&self, cycle: &Cycle) -> bool {
        if self.order.len() != cycle.len() {
            return false;
        }
        let mine: BTreeSet<&str> = self.order.iter().map(String::as_str).collect();
        cycle.tests().iter().all(|t| mine.contains(t.test_id.as_str()))
    }

    /// Verdicts in ranked order.
    pub fn verdicts(&self, cycle: &Cycle) -> Result<Vec<u8>> {
        self.order
            .iter()
            .map(|id| {
                cycle.get(id).map(|t| t.verdict).ok_or_else(|| {
                    Error::MismatchedRankings(format!("{id} is not in cycle {}", cycle.cycle_id))
                })
            })
            .collect()
    }
}

/// Normalized per-test observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// Failing tests first, then ascending duration, then ascending id.
pub fn optimal_ranking(cycle: &Cycle) -> Result<Ranking> {
    if cycle.is_empty() {
        return Err(Error::EmptyCycle);
    }
    let mut tests: Vec<&TestCaseRecord> = cycle.tests().iter().collect();
    tests.sort_by(|a, b| {
        b.verdict
            .cmp(&a.verdict)
            .then(a.duration.total_cmp(&b.duration))
            .then_with(|| a.test_id.cmp(&b.test_id))
    });
    Ranking::new(tests.into_iter().map(|t| t.test_id.clone()).collect())
}

/// `ceil(200 * n * log2 n)` training episodes, never fewer than 200.
pub fn episode_budget(n: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("episode budget needs n >= 1".into()));
    }
    let n = n as f64;
    let raw = (200.0 * n * n.log2()).ceil() as u64;
    Ok(raw.max(200))
}

fn min_max_scale(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 })
        .collect()
}

/// Features for every test of a cycle, in cycle order.
///
/// Layout: `[duration, age, history failure rate, last verdict, enriched...]`.
/// Duration, age and each enriched column are min-max scaled within the
/// cycle; a constant column maps to 0.
pub fn cycle_features(cycle: &Cycle) -> Vec<FeatureVector> {
    let tests = cycle.tests();
    let durations = min_max_scale(&tests.iter().map(|t| t.duration).collect::<Vec<_>>());
    let ages = min_max_scale(&tests.iter().map(|t| t.age as f64).collect::<Vec<_>>());
    let extra_width = tests[0].enriched.as_ref().map_or(0, Vec::len);
    let extra_cols: Vec<Vec<f64>> = (0..extra_width)
        .map(|j| {
            let col: Vec<f64> = tests
                .iter()
                .map(|t| t.enriched.as_ref().map_or(0.0, |e| e[j]))
                .collect();
            min_max_scale(&col)
        })
        .collect();

    tests
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let hist = &t.verdict_history;
            let fail_rate = if hist.is_empty() {
                0.0
            } else {
                hist.iter().map(|&v| f64::from(v)).sum::<f64>() / hist.len() as f64
            };
            let last = hist.last().map_or(0.0, |&v| f64::from(v));
            let mut values = vec![durations[i], ages[i], fail_rate, last];
            values.extend(extra_cols.iter().map(|col| col[i]));
            FeatureVector { values }
        })
        .collect()
}

/// Feature vector of one record, normalized against its cycle.
pub fn feature_vector(record: &TestCaseRecord, cycle: &Cycle) -> Result<FeatureVector> {
    let pos = cycle.position_of(&record.test_id).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "test {} is not part of cycle {}",
            record.test_id, cycle.cycle_id
        ))
    })?;
    Ok(cycle_features(cycle).swap_remove(pos))
}
