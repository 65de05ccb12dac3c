//! Block Maze: a grid world with walls, a goal coin and injected bug cells.
//!
//! The agent moves north/south/east/west; moving into a wall or off the
//! grid leaves it in place. Every step costs `r_step` except the one that
//! lands on the goal, which pays `r_goal` and ends the episode. Bug cells
//! are only recorded.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `(row, col)` with row 0 at the top.
pub type Cell = (usize, usize);

pub const DEFAULT_SIZE: usize = 20;
pub const DEFAULT_BUG_COUNT: usize = 25;
pub const DEFAULT_WALL_DENSITY: f64 = 0.2;
pub const DEFAULT_STEP_CAP: u64 = 500;
pub const MAX_WALL_DENSITY: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    North,
    South,
    East,
    West,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::North, Move::South, Move::East, Move::West];

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("maze action {i} out of range 0..4")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rewards {
    pub step: f64,
    pub goal: f64,
}

impl Default for Rewards {
    fn default() -> Self {
        Self { step: -1.0, goal: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationMode {
    #[default]
    Coordinates,
    OneHot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeSpec {
    pub width: usize,
    pub height: usize,
    walls: Vec<bool>,
    pub start: Cell,
    pub goal: Cell,
    bugs: Vec<bool>,
    bug_list: Vec<Cell>,
    pub step_cap: u64,
    pub rewards: Rewards,
}

impl MazeSpec {
    /// Builds and validates a maze.
    pub fn new(
        width: usize,
        height: usize,
        walls: &[Cell],
        start: Cell,
        goal: Cell,
        bugs: &[Cell],
        step_cap: u64,
        rewards: Rewards,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("maze dimensions must be positive".into()));
        }
        if step_cap == 0 {
            return Err(Error::InvalidArgument("step cap must be positive".into()));
        }
        let mut spec = Self {
            width,
            height,
            walls: vec![false; width * height],
            start,
            goal,
            bugs: vec![false; width * height],
            bug_list: Vec::new(),
            step_cap,
            rewards,
        };
        for &c in walls.iter().chain(bugs).chain([&start, &goal]) {
            if !spec.in_bounds(c) {
                return Err(Error::InvalidArgument(format!("cell {c:?} outside the maze")));
            }
        }
        for &w in walls {
            let i = spec.index(w);
            spec.walls[i] = true;
        }
        for &b in bugs {
            let i = spec.index(b);
            if !spec.bugs[i] {
                spec.bugs[i] = true;
                spec.bug_list.push(b);
            }
        }
        spec.bug_list.sort_unstable();
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_wall(self.start) || self.is_wall(self.goal) {
            return Err(Error::InvalidArgument("start and goal must not be walls".into()));
        }
        if self.bug_list.iter().any(|&b| self.is_wall(b)) {
            return Err(Error::InvalidArgument("bugs must not be placed on walls".into()));
        }
        if self.is_bug(self.start) {
            return Err(Error::InvalidArgument("start must not be a bug".into()));
        }
        if self.distances_from(self.start)[self.index(self.goal)].is_none() {
            return Err(Error::InvalidArgument("goal is unreachable from start".into()));
        }
        Ok(())
    }

    pub fn rewards(&self) -> Rewards {
        self.rewards
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn in_bounds(&self, (r, c): Cell) -> bool {
        r < self.height && c < self.width
    }

    pub fn index(&self, (r, c): Cell) -> usize {
        r * self.width + c
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        (index / self.width, index % self.width)
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.walls[self.index(c)]
    }

    pub fn is_bug(&self, c: Cell) -> bool {
        self.bugs[self.index(c)]
    }

    pub fn bugs(&self) -> &[Cell] {
        &self.bug_list
    }

    pub fn walls(&self) -> Vec<Cell> {
        (0..self.cells()).filter(|&i| self.walls[i]).map(|i| self.cell_at(i)).collect()
    }

    /// Neighbor in direction `m`, or `None` off the grid.
    pub fn neighbor(&self, (r, c): Cell, m: Move) -> Option<Cell> {
        let next = match m {
            Move::North => (r.checked_sub(1)?, c),
            Move::South => (r + 1, c),
            Move::East => (r, c + 1),
            Move::West => (r, c.checked_sub(1)?),
        };
        self.in_bounds(next).then_some(next)
    }

    /// BFS step distances through non-wall cells.
    pub fn distances_from(&self, from: Cell) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cells()];
        if self.is_wall(from) {
            return dist;
        }
        let mut queue = VecDeque::from([from]);
        dist[self.index(from)] = Some(0);
        while let Some(cell) = queue.pop_front() {
            let d = dist[self.index(cell)].expect("queued cells have a distance");
            for m in Move::ALL {
                if let Some(n) = self.neighbor(cell, m) {
                    let i = self.index(n);
                    if !self.walls[i] && dist[i].is_none() {
                        dist[i] = Some(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    /// Renders the grid with `#` wall, `.` free, `S` start, `G` goal, `B` bug.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                let cell = (r, c);
                let ch = if cell == self.start {
                    'S'
                } else if cell == self.goal {
                    'G'
                } else if self.is_wall(cell) {
                    '#'
                } else if self.is_bug(cell) {
                    'B'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }

    /// Parses the grid format produced by [`MazeSpec::to_text`].
    pub fn from_text(text: &str, step_cap: u64, rewards: Rewards) -> Result<Self> {
        let rows: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let (mut walls, mut bugs) = (Vec::new(), Vec::new());
        let (mut start, mut goal) = (None, None);
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Parse { line: r + 1, message: "ragged maze row".into() });
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '#' => walls.push((r, c)),
                    '.' => {}
                    'B' => bugs.push((r, c)),
                    'S' if start.is_none() => start = Some((r, c)),
                    'G' if goal.is_none() => goal = Some((r, c)),
                    other => {
                        return Err(Error::Parse {
                            line: r + 1,
                            message: format!("unexpected maze character {other:?}"),
                        })
                    }
                }
            }
        }
        let missing = |what: &str| Error::Parse { line: 0, message: format!("maze has no {what}") };
        Self::new(
            width,
            height,
            &walls,
            start.ok_or_else(|| missing("start"))?,
            goal.ok_or_else(|| missing("goal"))?,
            &bugs,
            step_cap,
            rewards,
        )
    }
}

/// Inputs to [`generate_maze`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MazeParams {
    pub width: usize,
    pub height: usize,
    pub wall_density: f64,
    pub bug_count: usize,
    pub step_cap: u64,
    pub rewards: Rewards,
}

impl Default for MazeParams {
    fn default() -> Self {
        Self {
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
            wall_density: DEFAULT_WALL_DENSITY,
            bug_count: DEFAULT_BUG_COUNT,
            step_cap: DEFAULT_STEP_CAP,
            rewards: Rewards::default(),
        }
    }
}

/// Random maze with the start in the top-left corner.
///
/// Walls are drawn i.i.d.; if the goal is cut off, the walls on a path that
/// crosses the fewest of them are removed. Goal and bugs are drawn uniformly
/// from free cells other than the start (bugs also avoid the goal).
pub fn generate_maze<R: Rng + ?Sized>(params: &MazeParams, rng: &mut R) -> Result<MazeSpec> {
    let MazeParams { width, height, wall_density, bug_count, step_cap, rewards } = *params;
    if !(0.0..=MAX_WALL_DENSITY).contains(&wall_density) {
        return Err(Error::InvalidArgument(format!(
            "wall density {wall_density} outside [0, {MAX_WALL_DENSITY}]"
        )));
    }
    let cells = width * height;
    if width == 0 || height == 0 || cells < bug_count + 2 {
        return Err(Error::InvalidArgument(format!(
            "{width}x{height} maze cannot hold start, goal and {bug_count} bugs"
        )));
    }
    let start: Cell = (0, 0);
    let index = |(r, c): Cell| r * width + c;
    let mut walls: Vec<bool> = (0..cells).map(|_| rng.random_bool(wall_density)).collect();
    walls[index(start)] = false;

    // Keep enough free cells for goal + bugs.
    let mut free = walls.iter().filter(|w| !**w).count();
    if free < bug_count + 2 {
        let mut walled: Vec<usize> = (0..cells).filter(|&i| walls[i]).collect();
        walled.shuffle(rng);
        for i in walled.into_iter().take(bug_count + 2 - free) {
            walls[i] = false;
        }
        free = bug_count + 2;
    }
    debug_assert!(free >= bug_count + 2);

    let candidates: Vec<usize> = (0..cells).filter(|&i| !walls[i] && i != index(start)).collect();
    let goal_index = candidates[rng.random_range(0..candidates.len())];
    let goal = (goal_index / width, goal_index % width);
    carve_path(&mut walls, width, height, start, goal);

    let mut bug_pool: Vec<usize> = (0..cells)
        .filter(|&i| !walls[i] && i != index(start) && i != goal_index)
        .collect();
    bug_pool.shuffle(rng);
    let bugs: Vec<Cell> = bug_pool[..bug_count].iter().map(|&i| (i / width, i % width)).collect();
    let wall_cells: Vec<Cell> =
        (0..cells).filter(|&i| walls[i]).map(|i| (i / width, i % width)).collect();
    MazeSpec::new(width, height, &wall_cells, start, goal, &bugs, step_cap, rewards)
}

/// 0-1 BFS where entering a wall costs 1; clears the walls on the cheapest path.
fn carve_path(walls: &mut [bool], width: usize, height: usize, start: Cell, goal: Cell) {
    let idx = |(r, c): Cell| r * width + c;
    let mut cost = vec![usize::MAX; walls.len()];
    let mut parent = vec![usize::MAX; walls.len()];
    let mut deque = VecDeque::from([start]);
    cost[idx(start)] = 0;
    while let Some(cell @ (r, c)) = deque.pop_front() {
        if cell == goal {
            break;
        }
        let here = cost[idx(cell)];
        let mut next = Vec::with_capacity(4);
        if r > 0 {
            next.push((r - 1, c));
        }
        if r + 1 < height {
            next.push((r + 1, c));
        }
        if c + 1 < width {
            next.push((r, c + 1));
        }
        if c > 0 {
            next.push((r, c - 1));
        }
        for n in next {
            let w = usize::from(walls[idx(n)]);
            if here + w < cost[idx(n)] {
                cost[idx(n)] = here + w;
                parent[idx(n)] = idx(cell);
                if w == 0 {
                    deque.push_front(n);
                } else {
                    deque.push_back(n);
                }
            }
        }
    }
    let mut at = idx(goal);
    while at != idx(start) {
        walls[at] = false;
        at = parent[at];
    }
}

/// Per-episode progress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeState {
    pub position: Cell,
    pub steps_taken: u64,
    visited: Vec<bool>,
    visited_count: usize,
    /// Bug cells in the order they were first triggered this episode.
    pub bugs_found: Vec<Cell>,
    pub done: bool,
}

impl MazeState {
    fn fresh(spec: &MazeSpec) -> Self {
        let mut visited = vec![false; spec.cells()];
        visited[spec.index(spec.start)] = true;
        Self {
            position: spec.start,
            steps_taken: 0,
            visited,
            visited_count: 1,
            bugs_found: Vec::new(),
            done: false,
        }
    }

    pub fn has_visited(&self, spec: &MazeSpec, c: Cell) -> bool {
        self.visited[spec.index(c)]
    }

    pub fn visited_count(&self) -> usize {
        self.visited_count
    }

    pub fn visited_cells(&self, spec: &MazeSpec) -> Vec<Cell> {
        (0..self.visited.len())
            .filter(|&i| self.visited[i])
            .map(|i| spec.cell_at(i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Set when this step triggered a bug for the first time in the episode.
    pub bug_triggered: Option<Cell>,
}

/// Distinct cells and bugs over a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub bugs_found_count: usize,
    pub state_coverage: usize,
}

/// Union of visited cells and found bugs over a run's episode states.
pub fn coverage_report(spec: &MazeSpec, history: &[MazeState]) -> CoverageReport {
    if history.is_empty() {
        return CoverageReport { bugs_found_count: 0, state_coverage: 1 };
    }
    let mut visited = vec![false; spec.cells()];
    let mut bugs = vec![false; spec.cells()];
    for state in history {
        for (v, &s) in visited.iter_mut().zip(&state.visited) {
            *v |= s;
        }
        for &b in &state.bugs_found {
            bugs[spec.index(b)] = true;
        }
    }
    CoverageReport {
        bugs_found_count: bugs.iter().filter(|b| **b).count(),
        state_coverage: visited.iter().filter(|v| **v).count(),
    }
}

pub fn encode_observation(position: Cell, spec: &MazeSpec, mode: ObservationMode) -> Vec<f64> {
    match mode {
        ObservationMode::Coordinates => {
            let scale = |v: usize, n: usize| if n > 1 { v as f64 / (n - 1) as f64 } else { 0.0 };
            vec![scale(position.0, spec.height), scale(position.1, spec.width)]
        }
        ObservationMode::OneHot => {
            let mut v = vec![0.0; spec.cells()];
            v[spec.index(position)] = 1.0;
            v
        }
    }
}

/// Episodic environment over a fixed maze, with run-wide coverage tracking.
#[derive(Debug, Clone)]
pub struct BlockMaze {
    spec: MazeSpec,
    mode: ObservationMode,
    state: MazeState,
    run_visited: Vec<bool>,
    run_bugs: Vec<bool>,
    run_coverage: CoverageReport,
}

impl BlockMaze {
    pub fn new(spec: MazeSpec, mode: ObservationMode) -> Self {
        let state = MazeState::fresh(&spec);
        let mut run_visited = vec![false; spec.cells()];
        run_visited[spec.index(spec.start)] = true;
        let run_bugs = vec![false; spec.cells()];
        Self {
            spec,
            mode,
            state,
            run_visited,
            run_bugs,
            run_coverage: CoverageReport { bugs_found_count: 0, state_coverage: 1 },
        }
    }

    pub fn spec(&self) -> &MazeSpec {
        &self.spec
    }

    pub fn state(&self) -> &MazeState {
        &self.state
    }

    pub fn observation_dim(&self) -> usize {
        match self.mode {
            ObservationMode::Coordinates => 2,
            ObservationMode::OneHot => self.spec.cells(),
        }
    }

    pub fn run_coverage(&self) -> CoverageReport {
        self.run_coverage
    }

    pub fn observation(&self) -> Vec<f64> {
        encode_observation(self.state.position, &self.spec, self.mode)
    }

    /// Starts a new episode; run-wide coverage is kept.
    pub fn reset(&mut self) -> Vec<f64> {
        self.state = MazeState::fresh(&self.spec);
        self.observation()
    }

    pub fn step(&mut self, action: Move) -> Result<MazeStep> {
        if self.state.done {
            return Err(Error::EpisodeFinished);
        }
        let spec = &self.spec;
        let state = &mut self.state;
        if let Some(next) = spec.neighbor(state.position, action) {
            if !spec.is_wall(next) {
                state.position = next;
            }
        }
        state.steps_taken += 1;
        let i = spec.index(state.position);
        if !state.visited[i] {
            state.visited[i] = true;
            state.visited_count += 1;
        }
        if !self.run_visited[i] {
            self.run_visited[i] = true;
            self.run_coverage.state_coverage += 1;
        }
        let mut bug_triggered = None;
        if spec.is_bug(state.position) && !state.bugs_found.contains(&state.position) {
            state.bugs_found.push(state.position);
            bug_triggered = Some(state.position);
            if !self.run_bugs[i] {
                self.run_bugs[i] = true;
                self.run_coverage.bugs_found_count += 1;
            }
        }
        let at_goal = state.position == spec.goal;
        let reward = if at_goal { spec.rewards.goal } else { spec.rewards.step };
        state.done = at_goal || state.steps_taken >= spec.step_cap;
        let done = state.done;
        Ok(MazeStep { observation: self.observation(), reward, done, bug_triggered })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open(width: usize, height: usize, goal: Cell) -> MazeSpec {
        MazeSpec::new(width, height, &[], (0, 0), goal, &[], 500, Rewards::default()).unwrap()
    }

    #[test]
    fn open_move_east() {
        let mut env = BlockMaze::new(open(3, 3, (2, 2)), ObservationMode::Coordinates);
        env.reset();
        let s = env.step(Move::East).unwrap();
        assert_eq!(env.state().position, (0, 1));
        assert_eq!(s.reward, -1.0);
        assert!(!s.done);
    }

    #[test]
    fn wall_blocks_movement() {
        let spec =
            MazeSpec::new(3, 3, &[(0, 1)], (0, 0), (2, 2), &[], 500, Rewards::default()).unwrap();
        let mut env = BlockMaze::new(spec, ObservationMode::Coordinates);
        let s = env.step(Move::East).unwrap();
        assert_eq!(env.state().position, (0, 0));
        assert_eq!(s.reward, -1.0);
        // off-grid moves are collisions too
        env.step(Move::North).unwrap();
        assert_eq!(env.state().position, (0, 0));
    }

    #[test]
    fn goal_pays_and_terminates() {
        let mut env = BlockMaze::new(open(2, 1, (0, 1)), ObservationMode::Coordinates);
        let s = env.step(Move::East).unwrap();
        assert_eq!(s.reward, 100.0);
        assert!(s.done);
        assert_eq!(env.step(Move::West).unwrap_err(), Error::EpisodeFinished);
    }

    #[test]
    fn step_cap_ends_episode() {
        let spec = MazeSpec::new(3, 3, &[], (0, 0), (2, 2), &[], 3, Rewards::default()).unwrap();
        let mut env = BlockMaze::new(spec, ObservationMode::Coordinates);
        assert!(!env.step(Move::North).unwrap().done);
        assert!(!env.step(Move::North).unwrap().done);
        assert!(env.step(Move::North).unwrap().done);
    }

    #[test]
    fn reset_state() {
        let spec = MazeSpec::new(4, 4, &[], (0, 0), (3, 3), &[(0, 1)], 50, Rewards::default()).unwrap();
        let mut env = BlockMaze::new(spec, ObservationMode::Coordinates);
        env.step(Move::East).unwrap();
        let obs = env.reset();
        let spec = env.spec();
        assert_eq!(env.state().visited_cells(spec), vec![spec.start]);
        assert!(env.state().bugs_found.is_empty());
        assert_eq!(obs, encode_observation(spec.start, spec, ObservationMode::Coordinates));
        // run coverage survives the reset
        assert_eq!(env.run_coverage(), CoverageReport { bugs_found_count: 1, state_coverage: 2 });
    }

    #[test]
    fn bugs_counted_once_and_reward_unchanged() {
        let spec = MazeSpec::new(4, 1, &[], (0, 0), (0, 3), &[(0, 1)], 50, Rewards::default()).unwrap();
        let mut env = BlockMaze::new(spec, ObservationMode::Coordinates);
        let s = env.step(Move::East).unwrap();
        assert_eq!(s.bug_triggered, Some((0, 1)));
        assert_eq!(s.reward, -1.0);
        env.step(Move::West).unwrap();
        assert_eq!(env.step(Move::East).unwrap().bug_triggered, None);
        assert_eq!(env.state().bugs_found, vec![(0, 1)]);
    }

    #[test]
    fn encodings() {
        let spec = open(20, 20, (5, 5));
        assert_eq!(encode_observation((0, 0), &spec, ObservationMode::Coordinates), vec![0.0, 0.0]);
        assert_eq!(encode_observation((19, 19), &spec, ObservationMode::Coordinates), vec![1.0, 1.0]);
        let oh = encode_observation((3, 7), &spec, ObservationMode::OneHot);
        assert_eq!(oh.len(), 400);
        assert_eq!(oh.iter().sum::<f64>(), 1.0);
        assert_eq!(oh[3 * 20 + 7], 1.0);
    }

    #[test]
    fn coverage_of_empty_and_row_walks() {
        let spec = open(6, 1, (0, 5));
        assert_eq!(coverage_report(&spec, &[]), CoverageReport { bugs_found_count: 0, state_coverage: 1 });
        let mut env = BlockMaze::new(spec.clone(), ObservationMode::Coordinates);
        for _ in 0..5 {
            env.step(Move::East).unwrap();
        }
        let report = coverage_report(&spec, &[env.state().clone()]);
        assert_eq!(report.state_coverage, 6);
        assert_eq!(report, env.run_coverage());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let r = Rewards::default();
        assert!(MazeSpec::new(3, 3, &[(0, 0)], (0, 0), (2, 2), &[], 9, r).is_err());
        assert!(MazeSpec::new(3, 3, &[(1, 1)], (0, 0), (2, 2), &[(1, 1)], 9, r).is_err());
        assert!(MazeSpec::new(3, 3, &[], (0, 0), (2, 2), &[(0, 0)], 9, r).is_err());
        // goal sealed off
        assert!(MazeSpec::new(3, 3, &[(1, 2), (2, 1)], (0, 0), (2, 2), &[], 9, r).is_err());
        assert!(MazeSpec::new(3, 3, &[], (0, 0), (3, 2), &[], 9, r).is_err());
    }

    #[test]
    fn generation_without_walls() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = MazeParams { wall_density: 0.0, ..MazeParams::default() };
        let spec = generate_maze(&p, &mut rng).unwrap();
        assert!(spec.walls().is_empty());
    }

    #[test]
    fn generation_places_requested_bugs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = generate_maze(&MazeParams::default(), &mut rng).unwrap();
        assert_eq!(spec.bugs().len(), 25);
        assert_eq!(spec.cells(), 400);
        assert!(spec.bugs().iter().all(|&b| !spec.is_wall(b) && b != spec.start));
    }

    #[test]
    fn generation_rejects_infeasible_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dense = MazeParams { wall_density: 0.5, ..MazeParams::default() };
        assert!(generate_maze(&dense, &mut rng).is_err());
        let crowded = MazeParams { width: 3, height: 3, bug_count: 8, ..MazeParams::default() };
        assert!(generate_maze(&crowded, &mut rng).is_err());
    }

    #[test]
    fn goal_reachable_for_many_seeds() {
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = MazeParams { wall_density: 0.4, ..MazeParams::default() };
            let spec = generate_maze(&p, &mut rng).unwrap();
            // Independent flood fill over the rendered grid.
            let grid: Vec<Vec<char>> = spec.to_text().lines().map(|l| l.chars().collect()).collect();
            let mut seen = vec![vec![false; 20]; 20];
            let mut stack = vec![(0usize, 0usize)];
            seen[0][0] = true;
            let mut reached = false;
            while let Some((r, c)) = stack.pop() {
                reached |= grid[r][c] == 'G';
                let mut push = |r: usize, c: usize| {
                    if grid[r][c] != '#' && !seen[r][c] {
                        seen[r][c] = true;
                        stack.push((r, c));
                    }
                };
                if r > 0 { push(r - 1, c) }
                if r < 19 { push(r + 1, c) }
                if c > 0 { push(r, c - 1) }
                if c < 19 { push(r, c + 1) }
            }
            assert!(reached, "seed {seed} produced an unreachable goal");
        }
    }

    #[test]
    fn random_walks_never_enter_walls() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let spec = generate_maze(&MazeParams { step_cap: 1000, ..MazeParams::default() }, &mut rng).unwrap();
        let mut env = BlockMaze::new(spec, ObservationMode::Coordinates);
        let mut bugs_seen = 0;
        for _ in 0..100_000 {
            let s = env.step(Move::from_index(rng.random_range(0..4)).unwrap()).unwrap();
            assert!(!env.spec().is_wall(env.state().position));
            assert!(s.reward == -1.0 || s.reward == 100.0);
            assert!(env.state().steps_taken <= 1000);
            let now = env.run_coverage().bugs_found_count;
            assert!(now >= bugs_seen);
            bugs_seen = now;
            if s.done {
                env.reset();
            }
        }
    }

    #[test]
    fn text_format_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = generate_maze(&MazeParams::default(), &mut rng).unwrap();
        let text = spec.to_text();
        assert_eq!(text.matches('B').count(), 25);
        let back = MazeSpec::from_text(&text, spec.step_cap, spec.rewards()).unwrap();
        assert_eq!(back, spec);
        assert!(MazeSpec::from_text("S.\n.G.\n", 10, Rewards::default()).is_err());
        assert!(MazeSpec::from_text("S.x\n..G\n", 10, Rewards::default()).is_err());
    }
}
