use rltestbench_core::domain::cycle_features;
use rltestbench_harness::dataset::{
    generate_dataset, parse_dataset, parse_dataset_with_min, write_dataset, DatasetProfile, Schema,
};

const HEADER: &str = "cycle_id,test_id,verdict,duration,age,verdict_history";

fn paint_control() -> DatasetProfile {
    DatasetProfile {
        cycles: 332,
        logs: 25_568,
        fail_rate: 0.1936,
        failed_cycles: 252,
        enriched: false,
        enriched_features: 3,
        history_window: 4,
    }
}

fn six_rows(cycle: u64, verdicts: &[u8]) -> String {
    verdicts
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{cycle},t{i},{v},{}.5,{i},0000\n", i + 1))
        .collect()
}

#[test]
fn mixed_verdicts_mark_the_cycle_failed() {
    // The loader keeps only cycles of 6+ tests; this one has two failing rows.
    let text = format!("{HEADER}\n{}", six_rows(4, &[0, 1, 0, 0, 0, 0]));
    let d = parse_dataset(text.as_bytes(), Some(Schema::Simple)).unwrap();
    assert_eq!(d.cycles.len(), 1);
    assert!(d.cycles[0].failed());
    assert_eq!(d.cycles[0].cycle_id, 4);
}

#[test]
fn two_row_cycle_fails_and_is_dropped_by_default() {
    let text = format!("{HEADER}\n1,a,0,1.0,0,0000\n1,b,1,2.0,0,0000\n");
    let d = parse_dataset(text.as_bytes(), None).unwrap();
    assert!(d.cycles.is_empty());
    assert_eq!(d.dropped_cycles, 1);
    let d = parse_dataset_with_min(text.as_bytes(), None, 1).unwrap();
    assert_eq!(d.cycles.len(), 1);
    assert!(d.cycles[0].failed());
}

#[test]
fn five_test_cycle_dropped_and_counted() {
    let text = format!("{HEADER}\n{}{}", six_rows(1, &[0; 6]), six_rows(2, &[0; 5]));
    let d = parse_dataset(text.as_bytes(), None).unwrap();
    assert_eq!(d.cycles.len(), 1);
    assert_eq!(d.dropped_cycles, 1);
}

#[test]
fn enriched_columns_extend_the_feature_vector() {
    let rows: String = (0..6).map(|i| format!("1,t{i},0,{i}.0,1,0101,0.{i},1.5,{i}\n")).collect();
    let text = format!("{HEADER},e1,e2,e3\n{rows}");
    let d = parse_dataset(text.as_bytes(), None).unwrap();
    assert_eq!(d.schema, Schema::Enriched(3));
    let f = cycle_features(&d.cycles[0]);
    assert!(f.iter().all(|v| v.values.len() == 7));
}

#[test]
fn malformed_row_reports_its_line() {
    let text = format!("{HEADER}\n1,a,0,1.0,0,0000\n1,b,2,1.0,0,0000\n");
    let err = parse_dataset(text.as_bytes(), None).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");
    let text = format!("{HEADER}\n1,a,0,fast,0,0000\n");
    assert!(parse_dataset(text.as_bytes(), None).unwrap_err().to_string().contains("line 2"));
}

#[test]
fn duplicate_test_in_cycle_rejected() {
    let text = format!("{HEADER}\n1,a,0,1.0,0,0000\n2,a,0,1.0,0,0000\n1,a,1,3.0,0,0000\n");
    let err = parse_dataset(text.as_bytes(), None).unwrap_err().to_string();
    assert!(err.contains("duplicate") && err.contains("line 4"), "{err}");
}

#[test]
fn zero_fail_rate_generates_only_passes() {
    let p = DatasetProfile { fail_rate: 0.0, failed_cycles: 0, ..paint_control() };
    let cycles = generate_dataset(&p, 1).unwrap();
    assert!(cycles.iter().all(|c| !c.failed()));
}

#[test]
fn paint_control_profile_hits_its_fail_rate() {
    let cycles = generate_dataset(&paint_control(), 2024).unwrap();
    let logs: usize = cycles.iter().map(|c| c.len()).sum();
    let fails: usize = cycles.iter().map(|c| c.failure_count()).sum();
    let rate = fails as f64 / logs as f64;
    assert_eq!(cycles.len(), 332);
    assert_eq!(logs, 25_568);
    assert!((0.17..=0.21).contains(&rate), "rate {rate}");
    assert_eq!(cycles.iter().filter(|c| c.failed()).count(), 252);
}

fn bytes(p: &DatasetProfile, seed: u64) -> Vec<u8> {
    let mut buf = Vec::new();
    write_dataset(&generate_dataset(p, seed).unwrap(), &mut buf).unwrap();
    buf
}

#[test]
fn same_seed_same_bytes() {
    let p = DatasetProfile { cycles: 60, logs: 900, fail_rate: 0.1, failed_cycles: 30, enriched: true, ..paint_control() };
    assert_eq!(bytes(&p, 9), bytes(&p, 9));
    assert_ne!(bytes(&p, 9), bytes(&p, 10));
}

#[test]
fn written_dataset_loads_back() {
    let p = DatasetProfile {
        cycles: 20,
        logs: 200,
        fail_rate: 0.05,
        failed_cycles: 6,
        enriched: true,
        enriched_features: 2,
        history_window: 4,
    };
    let cycles = generate_dataset(&p, 3).unwrap();
    let mut buf = Vec::new();
    write_dataset(&cycles, &mut buf).unwrap();
    let back = parse_dataset(buf.as_slice(), Some(Schema::Enriched(2))).unwrap();
    assert_eq!(back.cycles, cycles);
    assert_eq!(back.dropped_cycles, 0);
}
