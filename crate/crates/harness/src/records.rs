//! Metric streams written by every experiment.
//!
//! A record file is CSV preceded by a schema line:
//!
//! ```text
//! # rltestbench-records v1
//! label,algorithm,repetition,seed,index,metric,value,train_seconds,predict_seconds
//! ppo,ppo,0,1234,10000,bugs,7,1.52,0
//! ```
//!
//! `index` is the step checkpoint for the game and the evaluated cycle id for
//! prioritization. Only the two timing columns vary between identical runs.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use rltestbench_core::metrics::MetricKind;

use crate::error::{HarnessError, Result};

pub const SCHEMA_LINE: &str = "# rltestbench-records v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub algorithm: String,
    pub repetition: usize,
    /// Seed of the agent in this repetition.
    pub seed: u64,
    pub index: u64,
    pub metric: MetricKind,
    pub value: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

impl RunRecord {
    pub fn run_id(&self) -> String {
        format!("{}#{}", self.label, self.repetition)
    }
}

pub fn write_records<W: Write>(records: &[RunRecord], mut out: W) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}").map_err(|e| HarnessError::Data(e.to_string()))?;
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record([
            "label",
            "algorithm",
            "repetition",
            "seed",
            "index",
            "metric",
            "value",
            "train_seconds",
            "predict_seconds",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::Data(e.to_string()))?;
    Ok(())
}

pub fn save_records(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_records(records, std::io::BufWriter::new(file))
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| HarnessError::Data(e.to_string()))?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(HarnessError::Data(format!("line 1: expected {SCHEMA_LINE:?}, found {:?}", first.trim_end())));
    }
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let rec: RunRecord = row.map_err(|e| HarnessError::Data(format!("line {}: {e}", i + 3)))?;
        out.push(rec);
    }
    check_monotone(&out)?;
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_records(file).map_err(|e| match e {
        HarnessError::Data(m) => HarnessError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Indices must not decrease within one run and metric.
pub fn check_monotone(records: &[RunRecord]) -> Result<()> {
    let mut last: std::collections::HashMap<(String, usize, MetricKind), u64> = Default::default();
    for r in records {
        let key = (r.label.clone(), r.repetition, r.metric);
        if let Some(&prev) = last.get(&key) {
            if r.index < prev {
                return Err(HarnessError::Data(format!(
                    "run {} {}: index {} after {prev}",
                    r.run_id(),
                    r.metric,
                    r.index
                )));
            }
        }
        last.insert(key, r.index);
    }
    Ok(())
}

/// Records in file form with the timing columns zeroed, for comparing runs.
pub fn metric_fingerprint(records: &[RunRecord]) -> Result<String> {
    let stripped: Vec<RunRecord> = records
        .iter()
        .map(|r| RunRecord { train_seconds: 0.0, predict_seconds: 0.0, ..r.clone() })
        .collect();
    let mut buf = Vec::new();
    write_records(&stripped, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(index: u64, value: f64) -> RunRecord {
        RunRecord {
            label: "dqn".into(),
            algorithm: "dqn".into(),
            repetition: 0,
            seed: 42,
            index,
            metric: MetricKind::Bugs,
            value,
            train_seconds: 0.25,
            predict_seconds: 0.0,
        }
    }

    #[test]
    fn round_trip() {
        let rs = vec![rec(0, 0.0), rec(10, 3.0), rec(20, 0.1 + 0.2)];
        let mut buf = Vec::new();
        write_records(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# rltestbench-records v1\nlabel,algorithm,repetition,seed,index,metric,value,"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), rs);
    }

    #[test]
    fn empty_file_keeps_header() {
        let mut buf = Vec::new();
        write_records(&[], &mut buf).unwrap();
        assert!(read_records(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn missing_schema_line_rejected() {
        assert!(read_records("label,algorithm\n".as_bytes()).is_err());
    }

    #[test]
    fn decreasing_index_rejected() {
        assert!(check_monotone(&[rec(10, 0.0), rec(0, 0.0)]).is_err());
        let mut other = rec(0, 0.0);
        other.repetition = 1;
        assert!(check_monotone(&[rec(10, 0.0), other]).is_ok());
    }

    #[test]
    fn fingerprint_ignores_timing() {
        let a = vec![rec(0, 1.0)];
        let mut b = a.clone();
        b[0].train_seconds = 99.0;
        assert_eq!(metric_fingerprint(&a).unwrap(), metric_fingerprint(&b).unwrap());
        b[0].value = 2.0;
        assert_ne!(metric_fingerprint(&a).unwrap(), metric_fingerprint(&b).unwrap());
    }
}
