//! The work behind each CLI subcommand. Every command reads one config file
//! and writes its outputs under the configured output directory.

use std::path::{Path, PathBuf};

use rltestbench_core::metrics::MetricKind;

use crate::ci::{experiment_cycles, run_ciprio_experiment, save_evaluations};
use crate::config::{derive_seed, ExperimentConfig, Overrides, Task};
use crate::dataset::{generate_dataset, save_dataset};
use crate::error::{HarnessError, Result};
use crate::game::run_game_experiment;
use crate::records::{load_records, save_records, RunRecord};
use crate::report::{
    export_plot_data, metrics_present, render_anova, render_cle, render_pairs, samples_by_label, stats_report,
};

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::load(path)?;
    c.apply(overrides);
    Ok(c)
}

fn out_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(dir)
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

fn write_plots(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for metric in metrics_present(records) {
        for (label, text) in export_plot_data(records, metric) {
            written.push(write_text(dir.join(format!("plot_{label}_{metric}.csv")), &text)?);
        }
    }
    Ok(written)
}

/// `game-test`: records plus plot series.
pub fn game_test(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    config.validate_for(Task::Blockmaze)?;
    let dir = out_dir(config)?;
    let records = run_game_experiment(config)?;
    let path = dir.join("records.csv");
    save_records(&records, &path)?;
    let mut written = vec![path];
    written.extend(write_plots(&records, &dir)?);
    Ok(written)
}

/// `prioritize`: records, per-cycle evaluations and plot series.
pub fn prioritize(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    config.validate_for(Task::Ciprio)?;
    let (cycles, dropped) = experiment_cycles(config)?;
    if dropped > 0 {
        eprintln!("dropped {dropped} cycle(s) with fewer than {} tests", crate::config::MIN_TESTS_PER_CYCLE);
    }
    let dir = out_dir(config)?;
    let outcome = run_ciprio_experiment(config, &cycles)?;
    let records = dir.join("records.csv");
    save_records(&outcome.records, &records)?;
    let evaluations = dir.join("evaluations.csv");
    save_evaluations(&outcome.evaluations, &evaluations)?;
    let mut written = vec![records, evaluations];
    written.extend(write_plots(&outcome.records, &dir)?);
    Ok(written)
}

/// `gen-data`: a synthetic dataset from the `[generator]` profile.
pub fn gen_data(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let profile = config
        .generator
        .as_ref()
        .ok_or_else(|| HarnessError::Config("gen-data needs a [generator] section".into()))?;
    let cycles = generate_dataset(profile, derive_seed(config.seed, 0, 2))?;
    let dir = out_dir(config)?;
    let path = dir.join("dataset.csv");
    save_dataset(&cycles, &path)?;
    Ok(vec![path])
}

fn stats_inputs(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    if config.stats.inputs.is_empty() {
        return Err(HarnessError::Config("[stats] inputs lists no record files".into()));
    }
    let mut all = Vec::new();
    for p in &config.stats.inputs {
        all.extend(load_records(p)?);
    }
    Ok(all)
}

fn chosen_metric(config: &ExperimentConfig, records: &[RunRecord]) -> Result<MetricKind> {
    if let Some(m) = config.stats.metric {
        return Ok(m);
    }
    let present = metrics_present(records);
    if present.contains(&MetricKind::Bugs) {
        return Ok(MetricKind::Bugs);
    }
    match present.as_slice() {
        [only] => Ok(*only),
        _ => Err(HarnessError::Config("records hold several metrics; set [stats] metric".into())),
    }
}

/// `stats`: ANOVA, pairwise and CLE tables for the configured metric.
pub fn stats(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let records = stats_inputs(config)?;
    let metric = chosen_metric(config, &records)?;
    let out = stats_report(&samples_by_label(&records, metric))?;
    for (label, why) in &out.excluded {
        eprintln!("warning: {label} excluded: {why}");
    }
    let dir = out_dir(config)?;
    let pairs = render_pairs(&out.report);
    print!("{pairs}");
    Ok(vec![
        write_text(dir.join(format!("stats_{metric}_anova.csv")), &render_anova(&out.report))?,
        write_text(dir.join(format!("stats_{metric}_pairs.csv")), &pairs)?,
        write_text(dir.join(format!("stats_{metric}_cle.csv")), &render_cle(&out.report))?,
    ])
}

/// `report`: plot series for every metric in the input records.
pub fn report(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let records = stats_inputs(config)?;
    if records.is_empty() {
        return Err(HarnessError::Data("input record files are empty".into()));
    }
    let dir = out_dir(config)?;
    write_plots(&records, &dir)
}
