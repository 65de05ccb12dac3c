//! CI execution-log datasets: the CSV format, its loader and writer, and a
//! seeded generator of synthetic logs.
//!
//! Format (one row per test execution):
//!
//! ```text
//! cycle_id,test_id,verdict,duration,age,verdict_history[,e1..eM]
//! 1,T0001,0,12.5,3,0010
//! ```
//!
//! `verdict_history` is a fixed-width string of `0`/`1`, most recent last.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use rltestbench_core::domain::{Cycle, TestCaseRecord, DEFAULT_HISTORY_WINDOW};

use crate::config::MIN_TESTS_PER_CYCLE;
use crate::error::{HarnessError, Result};

const BASE_COLUMNS: [&str; 6] = ["cycle_id", "test_id", "verdict", "duration", "age", "verdict_history"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Simple,
    /// Number of extra columns `e1..eM`.
    Enriched(usize),
}

impl Schema {
    pub fn header(self) -> Vec<String> {
        let mut h: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
        if let Schema::Enriched(m) = self {
            h.extend((1..=m).map(|i| format!("e{i}")));
        }
        h
    }

    fn of_header(header: &csv::StringRecord) -> Result<Self> {
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < BASE_COLUMNS.len() || cols[..BASE_COLUMNS.len()] != BASE_COLUMNS {
            return Err(HarnessError::Data(format!(
                "line 1: header must start with {}",
                BASE_COLUMNS.join(",")
            )));
        }
        let extra = &cols[BASE_COLUMNS.len()..];
        for (i, c) in extra.iter().enumerate() {
            if *c != format!("e{}", i + 1) {
                return Err(HarnessError::Data(format!("line 1: expected column e{}, found {c}", i + 1)));
            }
        }
        Ok(if extra.is_empty() { Schema::Simple } else { Schema::Enriched(extra.len()) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub cycles: Vec<Cycle>,
    pub schema: Schema,
    /// Cycles discarded for having fewer than the minimum number of tests.
    pub dropped_cycles: usize,
}

pub fn load_dataset(path: &Path, schema: Option<Schema>) -> Result<LoadedDataset> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_dataset(file, schema).map_err(|e| match e {
        HarnessError::Data(m) => HarnessError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses the dataset format. When `schema` is given the header must match it.
pub fn parse_dataset<R: Read>(input: R, schema: Option<Schema>) -> Result<LoadedDataset> {
    parse_dataset_with_min(input, schema, MIN_TESTS_PER_CYCLE)
}

/// [`parse_dataset`] keeping cycles of at least `min_tests` tests.
pub fn parse_dataset_with_min<R: Read>(input: R, schema: Option<Schema>, min_tests: usize) -> Result<LoadedDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let found = Schema::of_header(reader.headers()?)?;
    if let Some(expected) = schema {
        if expected != found {
            return Err(HarnessError::Data(format!("line 1: expected {expected:?} schema, found {found:?}")));
        }
    }
    let width = found.header().len();
    let mut by_cycle: BTreeMap<u64, Vec<TestCaseRecord>> = BTreeMap::new();
    let mut seen = HashSet::new();
    let mut window = None;
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |m: String| HarnessError::Data(format!("line {line}: {m}"));
        if row.len() != width {
            return Err(bad(format!("expected {width} fields, found {}", row.len())));
        }
        let cycle_id: u64 = row[0].trim().parse().map_err(|_| bad(format!("bad cycle_id {:?}", &row[0])))?;
        let test_id = row[1].trim().to_string();
        if test_id.is_empty() {
            return Err(bad("empty test_id".into()));
        }
        let verdict = match row[2].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("verdict must be 0 or 1, found {other:?}"))),
        };
        let duration: f64 = row[3].trim().parse().map_err(|_| bad(format!("bad duration {:?}", &row[3])))?;
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(bad(format!("duration {duration} must be finite and non-negative")));
        }
        let age: u64 = row[4].trim().parse().map_err(|_| bad(format!("bad age {:?}", &row[4])))?;
        let history = row[5]
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(bad(format!("verdict_history must be 0/1 characters, found {:?}", &row[5]))),
            })
            .collect::<Result<Vec<u8>>>()?;
        match window {
            None => window = Some(history.len()),
            Some(w) if w != history.len() => {
                return Err(bad(format!("verdict_history has width {}, expected {w}", history.len())))
            }
            _ => {}
        }
        let enriched = match found {
            Schema::Simple => None,
            Schema::Enriched(_) => Some(
                (BASE_COLUMNS.len()..width)
                    .map(|i| {
                        let v: f64 = row[i].trim().parse().map_err(|_| bad(format!("bad value {:?}", &row[i])))?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(bad(format!("non-finite value {v}")))
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?,
            ),
        };
        if !seen.insert((cycle_id, test_id.clone())) {
            return Err(bad(format!("duplicate test {test_id} in cycle {cycle_id}")));
        }
        by_cycle.entry(cycle_id).or_default().push(TestCaseRecord {
            test_id,
            cycle_id,
            verdict,
            duration,
            age,
            verdict_history: history,
            enriched,
        });
    }
    let mut cycles = Vec::with_capacity(by_cycle.len());
    let mut dropped = 0;
    for (id, tests) in by_cycle {
        if tests.len() < min_tests {
            dropped += 1;
            continue;
        }
        cycles.push(Cycle::new(id, tests)?);
    }
    Ok(LoadedDataset { cycles, schema: found, dropped_cycles: dropped })
}

pub fn write_dataset<W: Write>(cycles: &[Cycle], out: W) -> Result<()> {
    let schema = match cycles.first().and_then(|c| c.tests()[0].enriched.as_ref()) {
        Some(e) => Schema::Enriched(e.len()),
        None => Schema::Simple,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(schema.header())?;
    for c in cycles {
        for t in c.tests() {
            let mut row = vec![
                c.cycle_id.to_string(),
                t.test_id.clone(),
                t.verdict.to_string(),
                t.duration.to_string(),
                t.age.to_string(),
                t.verdict_history.iter().map(|v| char::from(b'0' + v)).collect(),
            ];
            if let Some(e) = &t.enriched {
                if Schema::Enriched(e.len()) != schema {
                    return Err(HarnessError::Data("enriched width differs between cycles".into()));
                }
                row.extend(e.iter().map(f64::to_string));
            } else if schema != Schema::Simple {
                return Err(HarnessError::Data("mixed simple and enriched cycles".into()));
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| HarnessError::Data(e.to_string()))?;
    Ok(())
}

pub fn save_dataset(cycles: &[Cycle], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_dataset(cycles, std::io::BufWriter::new(file))
}

fn default_enriched_features() -> usize {
    3
}

fn default_history_window() -> usize {
    DEFAULT_HISTORY_WINDOW
}

/// Shape of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetProfile {
    pub cycles: usize,
    /// Total test executions.
    pub logs: usize,
    /// Fraction of executions that fail.
    pub fail_rate: f64,
    pub failed_cycles: usize,
    #[serde(default)]
    pub enriched: bool,
    #[serde(default = "default_enriched_features")]
    pub enriched_features: usize,
    #[serde(default = "default_history_window")]
    pub history_window: usize,
}

/// Largest allowed gap between the requested and the generated fail rate.
pub const FAIL_RATE_TOLERANCE: f64 = 0.02;

/// Weights of the logistic failure model on `[history failure rate,
/// normalized duration]`.
pub const FAILURE_WEIGHTS: [f64; 2] = [4.0, -2.0];

impl DatasetProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(format!("infeasible dataset profile: {m}")));
        if self.cycles == 0 {
            return bad("cycles must be positive".into());
        }
        if self.logs < self.cycles {
            return bad(format!("logs ({}) must be at least cycles ({})", self.logs, self.cycles));
        }
        if !(0.0..=1.0).contains(&self.fail_rate) {
            return bad(format!("fail_rate {} outside [0, 1]", self.fail_rate));
        }
        if self.failed_cycles > self.cycles {
            return bad("failed_cycles exceeds cycles".into());
        }
        if (self.fail_rate > 0.0) != (self.failed_cycles > 0) {
            return bad("fail_rate and failed_cycles must both be zero or both positive".into());
        }
        if self.enriched && self.enriched_features == 0 {
            return bad("an enriched profile needs at least one enriched feature".into());
        }
        let min_rate = self.failed_cycles as f64 / self.logs as f64;
        if min_rate > self.fail_rate + FAIL_RATE_TOLERANCE {
            return bad(format!("{} failed cycles need a fail rate of at least {min_rate:.4}", self.failed_cycles));
        }
        let max_rate = self.cycle_sizes()[..self.failed_cycles].iter().sum::<usize>() as f64 / self.logs as f64;
        if max_rate < self.fail_rate - FAIL_RATE_TOLERANCE {
            return bad(format!("{} failed cycles hold at most a fail rate of {max_rate:.4}", self.failed_cycles));
        }
        Ok(())
    }

    /// Tests per cycle: `logs` split as evenly as possible, larger first.
    fn cycle_sizes(&self) -> Vec<usize> {
        let base = self.logs / self.cycles;
        let extra = self.logs % self.cycles;
        (0..self.cycles).map(|c| base + usize::from(c < extra)).collect()
    }
}

/// Per-execution draws that do not depend on the failure bias.
struct Plan {
    /// Pool indices of the tests run in each cycle, ascending.
    members: Vec<Vec<usize>>,
    durations: Vec<Vec<f64>>,
    uniforms: Vec<Vec<f64>>,
    failed: Vec<bool>,
    pool: usize,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round_to(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

fn scaled(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 }).collect()
}

fn make_plan(profile: &DatasetProfile, rng: &mut ChaCha8Rng) -> Plan {
    let sizes = profile.cycle_sizes();
    let largest = sizes[0];
    let pool = largest + largest / 4 + 1;
    let base = LogNormal::new(10f64.ln(), 1.0).expect("valid log-normal");
    let jitter = LogNormal::new(0.0, 0.1).expect("valid log-normal");
    let base_durations: Vec<f64> = (0..pool).map(|_| base.sample(rng)).collect();

    let mut failed = vec![false; profile.cycles];
    for i in sample(rng, profile.cycles, profile.failed_cycles) {
        failed[i] = true;
    }
    let mut members = Vec::with_capacity(profile.cycles);
    let mut durations = Vec::with_capacity(profile.cycles);
    let mut uniforms = Vec::with_capacity(profile.cycles);
    for &n in &sizes {
        let mut m = sample(rng, pool, n).into_vec();
        m.sort_unstable();
        durations.push(
            m.iter()
                .map(|&t| round_to(base_durations[t] * jitter.sample(rng), 3).max(0.001))
                .collect(),
        );
        uniforms.push((0..n).map(|_| rng.random::<f64>()).collect());
        members.push(m);
    }
    Plan { members, durations, uniforms, failed, pool }
}

/// Verdicts of every execution for failure bias `bias`.
fn simulate(plan: &Plan, window: usize, bias: f64) -> Vec<Vec<u8>> {
    let mut history: Vec<Vec<u8>> = vec![vec![0; window]; plan.pool];
    let mut out = Vec::with_capacity(plan.members.len());
    for (c, members) in plan.members.iter().enumerate() {
        let norm = scaled(&plan.durations[c]);
        let mut verdicts = vec![0u8; members.len()];
        if plan.failed[c] {
            let probs: Vec<f64> = members
                .iter()
                .zip(&norm)
                .map(|(&t, &d)| {
                    let h = &history[t];
                    let rate = if window > 0 { h.iter().map(|&v| f64::from(v)).sum::<f64>() / window as f64 } else { 0.0 };
                    logistic(FAILURE_WEIGHTS[0] * rate + FAILURE_WEIGHTS[1] * d + bias)
                })
                .collect();
            for (j, p) in probs.iter().enumerate() {
                verdicts[j] = u8::from(plan.uniforms[c][j] < *p);
            }
            if verdicts.iter().all(|&v| v == 0) {
                let top = (0..probs.len()).fold(0, |b, j| if probs[j] > probs[b] { j } else { b });
                verdicts[top] = 1;
            }
        }
        for (&t, &v) in members.iter().zip(&verdicts) {
            let h = &mut history[t];
            if window > 0 {
                h.remove(0);
                h.push(v);
            }
        }
        out.push(verdicts);
    }
    out
}

/// Synthetic logs matching `profile`, identical for identical seeds.
///
/// Failures follow `P(fail) = logistic(w · [history failure rate,
/// normalized duration] + bias)` inside the designated failed cycles; the
/// bias is bisected until the overall fail rate matches the profile.
/// Enriched data gets a first extra column correlated with the verdict and
/// uniform noise in the rest.
pub fn generate_dataset(profile: &DatasetProfile, seed: u64) -> Result<Vec<Cycle>> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = make_plan(profile, &mut rng);
    let window = profile.history_window;
    let target = profile.fail_rate * profile.logs as f64;
    let failures = |v: &[Vec<u8>]| v.iter().flatten().map(|&x| x as usize).sum::<usize>() as f64;

    let mut verdicts = simulate(&plan, window, 0.0);
    if profile.failed_cycles > 0 {
        let (mut lo, mut hi) = (-30.0, 30.0);
        let mut best = (f64::INFINITY, 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let got = failures(&simulate(&plan, window, mid));
            if (got - target).abs() < best.0 {
                best = ((got - target).abs(), mid);
            }
            if got < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        verdicts = simulate(&plan, window, best.1);
    }
    let rate = failures(&verdicts) / profile.logs as f64;
    if (rate - profile.fail_rate).abs() > FAIL_RATE_TOLERANCE {
        return Err(HarnessError::Config(format!(
            "infeasible dataset profile: reached fail rate {rate:.4}, wanted {}",
            profile.fail_rate
        )));
    }

    let noise = Normal::new(0.0, 0.2).expect("valid normal");
    let mut history: Vec<Vec<u8>> = vec![vec![0; window]; plan.pool];
    let mut first_seen: Vec<Option<usize>> = vec![None; plan.pool];
    let mut cycles = Vec::with_capacity(profile.cycles);
    for (c, members) in plan.members.iter().enumerate() {
        let mut tests = Vec::with_capacity(members.len());
        for (j, &t) in members.iter().enumerate() {
            let first = *first_seen[t].get_or_insert(c);
            let v = verdicts[c][j];
            let enriched = profile.enriched.then(|| {
                (0..profile.enriched_features)
                    .map(|k| {
                        let x = if k == 0 { 0.3 + 0.4 * f64::from(v) + noise.sample(&mut rng) } else { rng.random() };
                        round_to(x.clamp(0.0, 1.0), 4)
                    })
                    .collect()
            });
            tests.push(TestCaseRecord {
                test_id: format!("T{t:04}"),
                cycle_id: c as u64 + 1,
                verdict: v,
                duration: plan.durations[c][j],
                age: (c - first) as u64,
                verdict_history: history[t].clone(),
                enriched,
            });
        }
        for (&t, &v) in members.iter().zip(&verdicts[c]) {
            if window > 0 {
                history[t].remove(0);
                history[t].push(v);
            }
        }
        cycles.push(Cycle::new(c as u64 + 1, tests)?);
    }
    Ok(cycles)
}
