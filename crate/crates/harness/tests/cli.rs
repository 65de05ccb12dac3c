use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rltestbench"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn help_exits_zero_and_usage_errors_exit_one() {
    assert_eq!(bin().arg("--help").status().unwrap().code(), Some(0));
    assert_eq!(bin().arg("fly").status().unwrap().code(), Some(1));
    assert_eq!(bin().arg("game-test").status().unwrap().code(), Some(1));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write(dir.path(), "a.toml", "repetitons = 3\n");
    let out = bin().args(["game-test", "--config"]).arg(&bad_key).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("repetitons"));
    let incompatible = write(dir.path(), "b.toml", "[agent]\nalgorithm = \"ddpg\"\n");
    assert_eq!(bin().args(["game-test", "--config"]).arg(&incompatible).status().unwrap().code(), Some(1));
    let missing = dir.path().join("absent.toml");
    assert_eq!(bin().args(["stats", "--config"]).arg(&missing).status().unwrap().code(), Some(2));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "cycle_id,test_id,verdict,duration,age,verdict_history\n1,a,7,1,0,0000\n");
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!("task = \"ciprio\"\n[ciprio]\ndataset = {:?}\n", data.to_str().unwrap()),
    );
    let out = bin().args(["prioritize", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn gen_data_prioritize_stats_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = write(
        d,
        "gen.toml",
        "seed = 4\n[generator]\ncycles = 5\nlogs = 40\nfail_rate = 0.1\nfailed_cycles = 3\n",
    );
    let st = bin().args(["gen-data", "--config"]).arg(&gen).arg("--out").arg(d.join("data")).status().unwrap();
    assert!(st.success());
    let dataset = d.join("data/dataset.csv");
    assert!(dataset.exists());

    for (label, alg) in [("pw-dqn", "dqn"), ("pw-a2c", "a2c")] {
        let cfg = write(
            d,
            &format!("{label}.toml"),
            &format!(
                "task = \"ciprio\"\nlabel = \"{label}\"\n[agent]\nalgorithm = \"{alg}\"\nhidden = [8]\n\
                 [ciprio]\nmodel = \"pairwise\"\ndataset = {:?}\nstep_cap = 200\npatience = 5\n",
                dataset.to_str().unwrap()
            ),
        );
        let st = bin().args(["prioritize", "--config"]).arg(&cfg).arg("--out").arg(d.join(label)).status().unwrap();
        assert!(st.success());
        assert!(d.join(label).join("evaluations.csv").exists());
    }

    let stats = write(
        d,
        "stats.toml",
        &format!(
            "output_dir = {:?}\n[stats]\nmetric = \"apfd\"\ninputs = [{:?}, {:?}]\n",
            d.join("stats").to_str().unwrap(),
            d.join("pw-dqn/records.csv").to_str().unwrap(),
            d.join("pw-a2c/records.csv").to_str().unwrap()
        ),
    );
    let out = bin().args(["stats", "--config"]).arg(&stats).output().unwrap();
    // Tiny histories can leave a group with constant APFD, which is reported
    // as a data error rather than a crash.
    match out.status.code() {
        Some(0) => {
            let table = String::from_utf8(out.stdout).unwrap();
            assert!(table.starts_with("A,B,mean(A),mean(B),p\n"));
            assert!(d.join("stats/stats_apfd_cle.csv").exists());
        }
        Some(2) => assert!(String::from_utf8_lossy(&out.stderr).contains("configurations")),
        other => panic!("unexpected exit {other:?}"),
    }
    assert!(bin().args(["report", "--config"]).arg(&stats).status().unwrap().success());
    assert!(d.join("stats/plot_pw-dqn_apfd.csv").exists());
}

#[test]
fn game_test_overrides_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.toml",
        "task = \"blockmaze\"\ncheckpoint_interval = 50\n[agent]\nalgorithm = \"ppo\"\nhidden = [8]\n\
         [agent.ppo]\nrollout_len = 32\nminibatch_size = 8\n[maze]\nwidth = 5\nheight = 5\nbug_count = 3\n",
    );
    let out_dir = dir.path().join("g");
    let st = bin()
        .args(["game-test", "--config"])
        .arg(&cfg)
        .args(["--steps", "120", "--reps", "2", "--seed", "8", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(st.success());
    let records = rltestbench_harness::records::load_records(&out_dir.join("records.csv")).unwrap();
    assert_eq!(records.len(), 2 * 4 * 3);
    let plot = std::fs::read_to_string(out_dir.join("plot_ppo_bugs.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some("steps,mean,stddev"));
    assert_eq!(plot.lines().count(), 5);
}
