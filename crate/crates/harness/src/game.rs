//! Bug hunting in the block maze: agents train on a fresh random maze per
//! repetition while run-wide bug and state coverage is tracked.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rltestbench_core::agents::{build_agent, ActionSpace, Agent, AgentConfig, Transition};
use rltestbench_core::blockmaze::{generate_maze, BlockMaze, MazeSpec, Move, ObservationMode};
use rltestbench_core::metrics::MetricKind;

use crate::config::{check_compatibility, derive_seed, ExperimentConfig, Task};
use crate::error::{HarnessError, Result};
use crate::records::RunRecord;

const MAZE_ROLE: u64 = 0;
const AGENT_ROLE: u64 = 1;

/// Run-wide progress at one step count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub bugs: usize,
    pub state_coverage: usize,
    pub cumulative_reward: f64,
}

/// One agent exploring one maze.
pub struct GameSession {
    env: BlockMaze,
    mode: ObservationMode,
    agent: Box<dyn Agent>,
    obs: Vec<f64>,
    steps: u64,
    cumulative_reward: f64,
    episodes: u64,
    goals: u64,
}

impl GameSession {
    pub fn new(spec: MazeSpec, mode: ObservationMode, agent: Box<dyn Agent>) -> Result<Self> {
        if agent.action_space() != ActionSpace::Discrete(Move::ALL.len()) {
            return Err(HarnessError::Config(format!(
                "{} agent must choose among {} moves",
                agent.algorithm(),
                Move::ALL.len()
            )));
        }
        let mut env = BlockMaze::new(spec, mode);
        let obs = env.reset();
        Ok(Self { env, mode, agent, obs, steps: 0, cumulative_reward: 0.0, episodes: 0, goals: 0 })
    }

    /// Builds the agent for `config` against this maze's observation size.
    pub fn with_config(spec: MazeSpec, mode: ObservationMode, config: &AgentConfig) -> Result<Self> {
        check_compatibility(config.algorithm, ActionSpace::Discrete(Move::ALL.len()), "the block maze")?;
        let dim = BlockMaze::new(spec.clone(), mode).observation_dim();
        let agent = build_agent(config, dim, ActionSpace::Discrete(Move::ALL.len()))?;
        Self::new(spec, mode, agent)
    }

    pub fn step(&mut self) -> Result<()> {
        let action = self.agent.act(&self.obs)?;
        let step = self.env.step(Move::from_index(action.discrete()?)?)?;
        self.steps += 1;
        self.cumulative_reward += step.reward;
        if step.done && self.env.state().position == self.env.spec().goal {
            self.goals += 1;
        }
        let next = step.observation;
        self.agent.observe(Transition {
            state: std::mem::take(&mut self.obs),
            action,
            reward: step.reward,
            next_state: next.clone(),
            done: step.done,
        })?;
        self.obs = if step.done {
            self.episodes += 1;
            self.env.reset()
        } else {
            next
        };
        Ok(())
    }

    pub fn run(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let c = self.env.run_coverage();
        Checkpoint {
            step: self.steps,
            bugs: c.bugs_found_count,
            state_coverage: c.state_coverage,
            cumulative_reward: self.cumulative_reward,
        }
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn goals(&self) -> u64 {
        self.goals
    }

    pub fn agent(&self) -> &dyn Agent {
        self.agent.as_ref()
    }

    /// Fraction of `episodes` greedy episodes, on a separate copy of the
    /// maze, that reach the goal before the step cap.
    pub fn goal_rate(&self, episodes: usize) -> Result<f64> {
        let mut env = BlockMaze::new(self.env.spec().clone(), self.mode);
        let mut reached = 0usize;
        for _ in 0..episodes {
            let mut obs = env.reset();
            loop {
                let a = self.agent.act_greedy(&obs)?;
                let s = env.step(Move::from_index(a.discrete()?)?)?;
                if s.done {
                    reached += usize::from(env.state().position == env.spec().goal);
                    break;
                }
                obs = s.observation;
            }
        }
        Ok(reached as f64 / episodes.max(1) as f64)
    }
}

/// Step counts at which checkpoints are taken: 0, every `interval`, and the
/// final step.
pub fn checkpoint_steps(total: u64, interval: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (0..=total).step_by(interval.max(1) as usize).collect();
    if *out.last().expect("0 is always present") != total {
        out.push(total);
    }
    out
}

/// Maze and agent seeds of one repetition.
pub fn repetition_seeds(config: &ExperimentConfig, repetition: usize) -> (u64, u64) {
    (derive_seed(config.seed, repetition, MAZE_ROLE), derive_seed(config.seed, repetition, AGENT_ROLE))
}

/// Trains a fresh agent on a fresh maze per repetition and records bugs,
/// state coverage and cumulative reward at every checkpoint.
pub fn run_game_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate_for(Task::Blockmaze)?;
    let label = config.label_for(Task::Blockmaze);
    let reps = config.repetitions_for(Task::Blockmaze);
    let checkpoints = checkpoint_steps(config.total_steps, config.checkpoint_interval);
    let mut records = Vec::with_capacity(reps * checkpoints.len() * 3);
    for rep in 0..reps {
        let (maze_seed, agent_seed) = repetition_seeds(config, rep);
        let spec = generate_maze(&config.maze.params(), &mut ChaCha8Rng::seed_from_u64(maze_seed))?;
        let agent_config = AgentConfig { seed: agent_seed, horizon: config.total_steps.max(1), ..config.agent.clone() };
        let mut session = GameSession::with_config(spec, config.maze.observation, &agent_config)?;
        let start = Instant::now();
        for &at in &checkpoints {
            session.run(at - session.checkpoint().step)?;
            let cp = session.checkpoint();
            let elapsed = start.elapsed().as_secs_f64();
            for (metric, value) in [
                (MetricKind::Bugs, cp.bugs as f64),
                (MetricKind::StateCoverage, cp.state_coverage as f64),
                (MetricKind::Reward, cp.cumulative_reward),
            ] {
                records.push(RunRecord {
                    label: label.clone(),
                    algorithm: config.agent.algorithm.to_string(),
                    repetition: rep,
                    seed: agent_seed,
                    index: cp.step,
                    metric,
                    value,
                    train_seconds: elapsed,
                    predict_seconds: 0.0,
                });
            }
        }
        let last = session.checkpoint();
        eprintln!(
            "{label} repetition {rep}: {} steps, {} bugs, {} states, {} episodes",
            last.step,
            last.bugs,
            last.state_coverage,
            session.episodes()
        );
    }
    Ok(records)
}
