use rltestbench_core::metrics::MetricKind;
use rltestbench_harness::records::{read_records, write_records, RunRecord};
use rltestbench_harness::report::{render_cle, render_pairs, samples_by_label, significant_pairs, stats_report};

fn records() -> Vec<RunRecord> {
    let data = [
        ("ppo", [15.0, 17.0, 14.0, 16.0, 13.0]),
        ("a2c", [14.0, 12.0, 15.0, 16.0, 13.0]),
        ("dqn", [1.0, 2.0, 0.0, 1.0, 3.0]),
    ];
    let mut out = Vec::new();
    for (label, finals) in data {
        for (rep, v) in finals.iter().enumerate() {
            for (index, value) in [(0, 0.0), (100, *v)] {
                out.push(RunRecord {
                    label: label.into(),
                    algorithm: label.into(),
                    repetition: rep,
                    seed: rep as u64,
                    index,
                    metric: MetricKind::Bugs,
                    value,
                    train_seconds: 0.0,
                    predict_seconds: 0.0,
                });
            }
        }
    }
    out
}

#[test]
fn pairs_table_matches_golden_file() {
    let mut buf = Vec::new();
    write_records(&records(), &mut buf).unwrap();
    let back = read_records(buf.as_slice()).unwrap();
    let out = stats_report(&samples_by_label(&back, MetricKind::Bugs)).unwrap();
    assert_eq!(render_pairs(&out.report), include_str!("golden/pairs.csv"));
    assert_eq!(render_cle(&out.report), include_str!("golden/cle.csv"));
    let sig = significant_pairs(&out.report);
    assert!(sig.contains(&("dqn".to_string(), "ppo".to_string())));
    assert!(!sig.contains(&("a2c".to_string(), "ppo".to_string())));
}
