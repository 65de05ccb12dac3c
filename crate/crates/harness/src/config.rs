//! Experiment configuration, read from TOML. Unknown keys are rejected at
//! every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rltestbench_core::agents::{ActionSpace, AgentConfig, Algorithm};
use rltestbench_core::blockmaze::{
    MazeParams, ObservationMode, Rewards, DEFAULT_BUG_COUNT, DEFAULT_SIZE, DEFAULT_STEP_CAP, DEFAULT_WALL_DENSITY,
    MAX_WALL_DENSITY,
};
use rltestbench_core::ciprio::{RankingModel, TrainBudget, DEFAULT_PATIENCE, DEFAULT_STEP_CAP as CI_STEP_CAP};
use rltestbench_core::metrics::MetricKind;

use crate::dataset::DatasetProfile;
use crate::error::{HarnessError, Result};

pub const DEFAULT_GAME_STEPS: u64 = 4_000_000;
pub const DEFAULT_GAME_REPETITIONS: usize = 10;
pub const DEFAULT_CHECKPOINT_INTERVAL: u64 = 10_000;
/// Cycles with fewer tests are dropped when a dataset is loaded.
pub const MIN_TESTS_PER_CYCLE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Blockmaze,
    Ciprio,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Blockmaze => "blockmaze",
            Task::Ciprio => "ciprio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MazeConfig {
    pub width: usize,
    pub height: usize,
    pub wall_density: f64,
    pub bug_count: usize,
    pub step_cap: u64,
    pub rewards: Rewards,
    pub observation: ObservationMode,
}

impl Default for MazeConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
            wall_density: DEFAULT_WALL_DENSITY,
            bug_count: DEFAULT_BUG_COUNT,
            step_cap: DEFAULT_STEP_CAP,
            rewards: Rewards::default(),
            observation: ObservationMode::Coordinates,
        }
    }
}

impl MazeConfig {
    pub fn params(&self) -> MazeParams {
        MazeParams {
            width: self.width,
            height: self.height,
            wall_density: self.wall_density,
            bug_count: self.bug_count,
            step_cap: self.step_cap,
            rewards: self.rewards,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CiprioConfig {
    pub model: RankingModel,
    /// CSV file in the dataset format; when absent, `[generator]` is used.
    pub dataset: Option<PathBuf>,
    /// Listwise padding length; defaults to the largest cycle.
    pub slots: Option<usize>,
    pub step_cap: u64,
    pub patience: usize,
    pub budget_scale: f64,
}

impl Default for CiprioConfig {
    fn default() -> Self {
        Self {
            model: RankingModel::Pairwise,
            dataset: None,
            slots: None,
            step_cap: CI_STEP_CAP,
            patience: DEFAULT_PATIENCE,
            budget_scale: 1.0,
        }
    }
}

impl CiprioConfig {
    pub fn budget(&self) -> TrainBudget {
        TrainBudget { step_cap: self.step_cap, patience: self.patience, budget_scale: self.budget_scale }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    /// Record files to compare; configurations are told apart by label.
    pub inputs: Vec<PathBuf>,
    pub metric: Option<MetricKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<Task>,
    /// Name of the configuration in records and reports.
    pub label: Option<String>,
    pub seed: u64,
    /// Defaults to 10 for the game and 1 for prioritization.
    pub repetitions: Option<usize>,
    pub total_steps: u64,
    pub checkpoint_interval: u64,
    pub output_dir: PathBuf,
    pub agent: AgentConfig,
    pub maze: MazeConfig,
    pub ciprio: CiprioConfig,
    pub generator: Option<DatasetProfile>,
    pub stats: StatsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: None,
            label: None,
            seed: 0,
            repetitions: None,
            total_steps: DEFAULT_GAME_STEPS,
            checkpoint_interval: DEFAULT_CHECKPOINT_INTERVAL,
            output_dir: PathBuf::from("results"),
            agent: AgentConfig::default(),
            maze: MazeConfig::default(),
            ciprio: CiprioConfig::default(),
            generator: None,
            stats: StatsConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(s) = o.steps {
            self.total_steps = s;
        }
        if let Some(r) = o.reps {
            self.repetitions = Some(r);
        }
        if let Some(p) = &o.out {
            self.output_dir = p.clone();
        }
    }

    pub fn repetitions_for(&self, task: Task) -> usize {
        self.repetitions.unwrap_or(match task {
            Task::Blockmaze => DEFAULT_GAME_REPETITIONS,
            Task::Ciprio => 1,
        })
    }

    pub fn label_for(&self, task: Task) -> String {
        match (&self.label, task) {
            (Some(l), _) => l.clone(),
            (None, Task::Blockmaze) => self.agent.algorithm.to_string(),
            (None, Task::Ciprio) => format!("{}-{}", self.ciprio.model, self.agent.algorithm),
        }
    }

    /// Checks everything that can be checked before any work starts.
    pub fn validate_for(&self, task: Task) -> Result<()> {
        if let Some(t) = self.task {
            if t != task {
                return Err(HarnessError::Config(format!(
                    "config is for task {}, not {}",
                    t.as_str(),
                    task.as_str()
                )));
            }
        }
        if self.repetitions == Some(0) {
            return Err(HarnessError::Config("repetitions must be at least 1".into()));
        }
        if self.label.as_deref().is_some_and(|l| l.is_empty() || l.contains([',', '\n'])) {
            return Err(HarnessError::Config("label must be non-empty and free of commas".into()));
        }
        self.agent.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        match task {
            Task::Blockmaze => {
                if self.checkpoint_interval == 0 {
                    return Err(HarnessError::Config("checkpoint_interval must be positive".into()));
                }
                let m = &self.maze;
                if m.width == 0 || m.height == 0 || m.step_cap == 0 {
                    return Err(HarnessError::Config("maze dimensions and step cap must be positive".into()));
                }
                if !(0.0..=MAX_WALL_DENSITY).contains(&m.wall_density) {
                    return Err(HarnessError::Config(format!(
                        "wall_density {} outside [0, {MAX_WALL_DENSITY}]",
                        m.wall_density
                    )));
                }
                check_compatibility(self.agent.algorithm, ActionSpace::Discrete(4), "the block maze")
            }
            Task::Ciprio => {
                let c = &self.ciprio;
                if c.patience == 0 || !(c.budget_scale > 0.0) || c.step_cap == 0 {
                    return Err(HarnessError::Config("patience, budget_scale and step_cap must be positive".into()));
                }
                if c.slots == Some(0) {
                    return Err(HarnessError::Config("slots must be positive".into()));
                }
                if c.dataset.is_none() && self.generator.is_none() {
                    return Err(HarnessError::Config("ciprio needs a dataset path or a [generator] section".into()));
                }
                if let Some(p) = &self.generator {
                    p.validate()?;
                }
                check_compatibility(self.agent.algorithm, model_action_kind(c.model), c.model.as_str())
            }
        }
    }
}

/// Representative action space of a ranking model; only its kind matters
/// for compatibility.
pub fn model_action_kind(model: RankingModel) -> ActionSpace {
    match model {
        RankingModel::Pairwise => ActionSpace::Discrete(2),
        RankingModel::Listwise => ActionSpace::Discrete(1),
        RankingModel::Pointwise => ActionSpace::Continuous(1),
    }
}

pub fn check_compatibility(algorithm: Algorithm, space: ActionSpace, target: &str) -> Result<()> {
    if algorithm.supports(space) {
        Ok(())
    } else {
        let kind = if space.is_discrete() { "discrete" } else { "continuous" };
        Err(HarnessError::Config(format!("{algorithm} does not support the {kind} actions of {target}")))
    }
}

/// Independent seed for one role of one repetition.
pub fn derive_seed(base: u64, repetition: usize, role: u64) -> u64 {
    splitmix64(base ^ splitmix64((repetition as u64).wrapping_mul(8).wrapping_add(role)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.repetitions_for(Task::Blockmaze), 10);
        assert_eq!(c.total_steps, 4_000_000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("sed = 3").is_err());
        assert!(ExperimentConfig::from_toml_str("[agent]\nlearning_rate = 0.1").is_err());
        assert!(ExperimentConfig::from_toml_str("[maze]\ndepth = 2").is_err());
    }

    #[test]
    fn nested_sections_parse() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            task = "ciprio"
            [agent]
            algorithm = "ddpg"
            [agent.ddpg]
            tau = 0.01
            [ciprio]
            model = "pointwise"
            dataset = "data.csv"
            "#,
        )
        .unwrap();
        assert_eq!(c.agent.algorithm, Algorithm::Ddpg);
        assert_eq!(c.agent.ddpg.tau, 0.01);
        assert_eq!(c.ciprio.model, RankingModel::Pointwise);
        c.validate_for(Task::Ciprio).unwrap();
        assert_eq!(c.label_for(Task::Ciprio), "pointwise-ddpg");
    }

    #[test]
    fn compatibility_matrix() {
        use Algorithm::*;
        use RankingModel::*;
        for (alg, model, ok) in [
            (Dqn, Pairwise, true),
            (Dqn, Listwise, true),
            (Dqn, Pointwise, false),
            (Ddpg, Pairwise, false),
            (Ddpg, Listwise, false),
            (Ddpg, Pointwise, true),
            (A2c, Pointwise, true),
            (Ppo, Listwise, true),
        ] {
            let mut c = ExperimentConfig::default();
            c.agent.algorithm = alg;
            c.ciprio.model = model;
            c.ciprio.dataset = Some("x.csv".into());
            assert_eq!(c.validate_for(Task::Ciprio).is_ok(), ok, "{alg} {model}");
        }
        let mut c = ExperimentConfig::default();
        c.agent.algorithm = Ddpg;
        let err = c.validate_for(Task::Blockmaze).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn overrides_win() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides { seed: Some(9), steps: Some(0), reps: Some(2), out: Some("o".into()) });
        assert_eq!((c.seed, c.total_steps, c.repetitions, c.output_dir), (9, 0, Some(2), PathBuf::from("o")));
    }

    #[test]
    fn zero_repetitions_rejected() {
        let c = ExperimentConfig { repetitions: Some(0), ..ExperimentConfig::default() };
        assert!(c.validate_for(Task::Blockmaze).is_err());
    }

    #[test]
    fn wrong_task_rejected() {
        let c = ExperimentConfig { task: Some(Task::Ciprio), ..ExperimentConfig::default() };
        assert!(c.validate_for(Task::Blockmaze).is_err());
    }

    #[test]
    fn derived_seeds_differ_by_role_and_repetition() {
        let mut seen = std::collections::HashSet::new();
        for rep in 0..50 {
            for role in 0..3 {
                assert!(seen.insert(derive_seed(7, rep, role)));
            }
        }
        assert_eq!(derive_seed(7, 3, 1), derive_seed(7, 3, 1));
    }
}
