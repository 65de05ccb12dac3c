//! Statistical comparison of configurations and plot-data export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rltestbench_core::metrics::MetricKind;
use rltestbench_core::stats::{StatReport, Summary};

use crate::error::{HarnessError, Result};
use crate::records::RunRecord;

/// Header of the pairwise table.
pub const PAIRS_HEADER: &str = "A,B,mean(A),mean(B),p";

fn per_run_metric(kind: MetricKind) -> bool {
    matches!(kind, MetricKind::Bugs | MetricKind::StateCoverage | MetricKind::Reward)
}

/// Observations per label. Game metrics contribute the final checkpoint of
/// each repetition; prioritization metrics contribute every cycle.
pub fn samples_by_label(records: &[RunRecord], metric: MetricKind) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    if per_run_metric(metric) {
        let mut last: BTreeMap<(String, usize), (u64, f64)> = BTreeMap::new();
        for r in records.iter().filter(|r| r.metric == metric) {
            let e = last.entry((r.label.clone(), r.repetition)).or_insert((r.index, r.value));
            if r.index >= e.0 {
                *e = (r.index, r.value);
            }
        }
        for ((label, _), (_, v)) in last {
            out.entry(label).or_default().push(v);
        }
    } else {
        for r in records.iter().filter(|r| r.metric == metric) {
            out.entry(r.label.clone()).or_default().push(r.value);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsOutput {
    pub report: StatReport,
    /// Labels left out, with the reason.
    pub excluded: Vec<(String, String)>,
}

/// Welch's ANOVA, Games-Howell and CLE over the non-degenerate groups.
/// Groups with fewer than 2 values or zero variance are excluded.
pub fn stats_report(samples: &BTreeMap<String, Vec<f64>>) -> Result<StatsOutput> {
    let mut names = Vec::new();
    let mut groups = Vec::new();
    let mut excluded = Vec::new();
    for (label, values) in samples {
        if values.len() < 2 {
            excluded.push((label.clone(), format!("only {} observation(s)", values.len())));
            continue;
        }
        let s = Summary::of(values)?;
        if !(s.variance > 0.0) {
            excluded.push((label.clone(), format!("zero variance (all values {})", s.mean)));
            continue;
        }
        names.push(label.clone());
        groups.push(values.clone());
    }
    if names.len() < 2 {
        return Err(HarnessError::Data(format!(
            "need at least 2 configurations with varying observations, have {}",
            names.len()
        )));
    }
    Ok(StatsOutput { report: StatReport::compute(names, &groups)?, excluded })
}

/// One `A,B,mean(A),mean(B),p` row per pair, four decimals.
pub fn render_pairs(report: &StatReport) -> String {
    let mut s = String::from(PAIRS_HEADER);
    s.push('\n');
    for p in &report.pairs {
        writeln!(
            s,
            "{},{},{:.4},{:.4},{:.4}",
            report.names[p.a], report.names[p.b], p.mean_a, p.mean_b, p.p
        )
        .expect("writing to a String");
    }
    s
}

/// Square matrix; cell (row i, column j) is CLE(i, j).
pub fn render_cle(report: &StatReport) -> String {
    let mut s = String::new();
    for n in &report.names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (name, row) in report.names.iter().zip(&report.cle) {
        s.push_str(name);
        for v in row {
            write!(s, ",{v:.4}").expect("writing to a String");
        }
        s.push('\n');
    }
    s
}

pub fn render_anova(report: &StatReport) -> String {
    let a = &report.anova;
    format!("F,df1,df2,p\n{:.4},{:.4},{:.4},{:.4}\n", a.f, a.df1, a.df2, a.p)
}

/// Pairs significant at the 0.05 level, as `(A, B)`.
pub fn significant_pairs(report: &StatReport) -> Vec<(String, String)> {
    report
        .pairs
        .iter()
        .filter(|p| p.significant)
        .map(|p| (report.names[p.a].clone(), report.names[p.b].clone()))
        .collect()
}

fn stddev(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Plot series per label. Game metrics become `steps,mean,stddev` over
/// repetitions (sample standard deviation, 0 for a single run); cycle
/// metrics become `cycle,value`, averaged over repetitions.
pub fn export_plot_data(records: &[RunRecord], metric: MetricKind) -> BTreeMap<String, String> {
    let mut by_label: BTreeMap<&str, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.metric == metric) {
        by_label.entry(&r.label).or_default().entry(r.index).or_default().push(r.value);
    }
    by_label
        .into_iter()
        .map(|(label, points)| {
            let mut s = String::new();
            if per_run_metric(metric) {
                s.push_str("steps,mean,stddev\n");
                for (step, vals) in points {
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    writeln!(s, "{step},{mean},{}", stddev(&vals, mean)).expect("writing to a String");
                }
            } else {
                s.push_str("cycle,value\n");
                for (cycle, vals) in points {
                    writeln!(s, "{cycle},{}", vals.iter().sum::<f64>() / vals.len() as f64)
                        .expect("writing to a String");
                }
            }
            (label.to_string(), s)
        })
        .collect()
}

/// Metric kinds present in `records`, in a fixed order.
pub fn metrics_present(records: &[RunRecord]) -> Vec<MetricKind> {
    let mut kinds: Vec<MetricKind> = records.iter().map(|r| r.metric).collect();
    kinds.sort();
    kinds.dedup();
    kinds
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(label: &str, rep: usize, index: u64, metric: MetricKind, value: f64) -> RunRecord {
        RunRecord {
            label: label.into(),
            algorithm: label.into(),
            repetition: rep,
            seed: rep as u64,
            index,
            metric,
            value,
            train_seconds: 0.0,
            predict_seconds: 0.0,
        }
    }

    #[test]
    fn game_samples_use_final_checkpoint() {
        let rs = vec![
            rec("a", 0, 0, MetricKind::Bugs, 0.0),
            rec("a", 0, 10, MetricKind::Bugs, 4.0),
            rec("a", 1, 0, MetricKind::Bugs, 0.0),
            rec("a", 1, 10, MetricKind::Bugs, 6.0),
            rec("a", 1, 10, MetricKind::Reward, -5.0),
        ];
        assert_eq!(samples_by_label(&rs, MetricKind::Bugs)["a"], vec![4.0, 6.0]);
    }

    #[test]
    fn cycle_samples_use_every_cycle() {
        let rs = vec![rec("p", 0, 2, MetricKind::Nrpa, 0.9), rec("p", 0, 3, MetricKind::Nrpa, 0.8)];
        assert_eq!(samples_by_label(&rs, MetricKind::Nrpa)["p"], vec![0.9, 0.8]);
    }

    #[test]
    fn degenerate_groups_excluded() {
        let mut s = BTreeMap::new();
        s.insert("a".to_string(), vec![1.0, 2.0, 3.0]);
        s.insert("b".to_string(), vec![2.0, 3.0, 5.0]);
        s.insert("c".to_string(), vec![4.0, 4.0]);
        s.insert("d".to_string(), vec![1.0]);
        let out = stats_report(&s).unwrap();
        assert_eq!(out.report.names, vec!["a", "b"]);
        assert_eq!(out.excluded.len(), 2);
        s.remove("b");
        assert!(stats_report(&s).is_err());
    }

    #[test]
    fn identical_configurations_not_significant() {
        let mut s = BTreeMap::new();
        s.insert("x".to_string(), vec![1.0, 2.0, 4.0, 3.0]);
        s.insert("y".to_string(), vec![1.0, 2.0, 4.0, 3.0]);
        let out = stats_report(&s).unwrap();
        assert!(significant_pairs(&out.report).is_empty());
        assert_eq!(out.report.cle[0][1], 0.5);
    }

    #[test]
    fn separated_groups_flagged() {
        let mut s = BTreeMap::new();
        s.insert("low".to_string(), vec![1.0, 1.2, 0.9, 1.1, 1.0]);
        s.insert("high".to_string(), vec![9.0, 9.5, 8.8, 9.1, 9.3]);
        s.insert("mid".to_string(), vec![5.0, 5.5, 4.6, 5.2, 4.9]);
        let out = stats_report(&s).unwrap();
        let sig = significant_pairs(&out.report);
        assert_eq!(sig.len(), 3);
        assert_eq!(out.report.cle[0][1], 1.0);
    }

    #[test]
    fn plot_single_run_has_zero_stddev() {
        let rs = vec![rec("a", 0, 0, MetricKind::Bugs, 0.0), rec("a", 0, 10, MetricKind::Bugs, 3.0)];
        assert_eq!(export_plot_data(&rs, MetricKind::Bugs)["a"], "steps,mean,stddev\n0,0,0\n10,3,0\n");
    }

    #[test]
    fn plot_constant_runs() {
        let rs: Vec<RunRecord> = (0..10).map(|r| rec("a", r, 5, MetricKind::Reward, 2.5)).collect();
        assert_eq!(export_plot_data(&rs, MetricKind::Reward)["a"], "steps,mean,stddev\n5,2.5,0\n");
    }

    #[test]
    fn plot_cycles() {
        let rs = vec![rec("p", 0, 2, MetricKind::Apfd, 0.5), rec("p", 1, 2, MetricKind::Apfd, 0.7)];
        assert_eq!(export_plot_data(&rs, MetricKind::Apfd)["p"], "cycle,value\n2,0.6\n");
    }
}
