use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::policy::{encode_percept_action, povm_action_subsystem, PovmSet};
use crate::qmath::{DensityMatrix, RngStream};

pub const GRID_SIZE: usize = 3;
pub const NUM_ACTIONS: usize = 4;

/// `(row, col)` counted from the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Move directions in action-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Right = 0,
    Down = 1,
    Left = 2,
    Up = 3,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Right, Move::Down, Move::Left, Move::Up];

    pub fn name(self) -> &'static str {
        match self {
            Move::Right => "right",
            Move::Down => "down",
            Move::Left => "left",
            Move::Up => "up",
        }
    }
}

/// Result of one move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStep {
    pub next: Cell,
    pub reward: f64,
    pub terminal: bool,
    pub hit_boundary: bool,
}

/// 3×3 grid with one obstacle. The default layout is
///
/// ```text
///  .  .  .
///  .  .  .
///  S  #  G
/// ```
///
/// whose shortest S→G path has four moves, with two optimal directions in
/// the upper-left and upper-middle cells.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridWorld {
    #[serde(default = "default_obstacle")]
    pub obstacle: Cell,
    #[serde(default = "default_start")]
    pub start: Cell,
    #[serde(default = "default_goal")]
    pub goal: Cell,
    #[serde(default = "unit")]
    pub goal_reward: f64,
    #[serde(default)]
    pub boundary_penalty: Option<f64>,
    #[serde(default)]
    pub random_start: bool,
}

fn default_obstacle() -> Cell {
    Cell::new(2, 1)
}

fn default_start() -> Cell {
    Cell::new(2, 0)
}

fn default_goal() -> Cell {
    Cell::new(2, 2)
}

fn unit() -> f64 {
    1.0
}

impl Default for GridWorld {
    fn default() -> Self {
        Self {
            obstacle: default_obstacle(),
            start: default_start(),
            goal: default_goal(),
            goal_reward: 1.0,
            boundary_penalty: None,
            random_start: false,
        }
    }
}

impl GridWorld {
    pub fn validate(&self) -> Result<()> {
        for c in [self.obstacle, self.start, self.goal] {
            if c.row >= GRID_SIZE || c.col >= GRID_SIZE {
                return Err(Error::invalid(format!("cell {c} outside the grid")));
            }
        }
        if self.obstacle == self.start || self.obstacle == self.goal || self.start == self.goal {
            return Err(Error::invalid("start, goal and obstacle must be distinct"));
        }
        Ok(())
    }

    /// The eight free cells in row-major order; their position is the percept label.
    pub fn free_cells(&self) -> Vec<Cell> {
        (0..GRID_SIZE * GRID_SIZE)
            .map(|i| Cell::new(i / GRID_SIZE, i % GRID_SIZE))
            .filter(|&c| c != self.obstacle)
            .collect()
    }

    pub fn cell_index(&self, cell: Cell) -> usize {
        self.free_cells()
            .iter()
            .position(|&c| c == cell)
            .expect("cell is free")
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        cell.row < GRID_SIZE && cell.col < GRID_SIZE && cell != self.obstacle
    }

    /// Target of a move, or `None` when blocked.
    pub fn neighbour(&self, cell: Cell, action: usize) -> Option<Cell> {
        let (r, c) = (cell.row as isize, cell.col as isize);
        let (r, c) = match Move::ALL[action] {
            Move::Right => (r, c + 1),
            Move::Down => (r + 1, c),
            Move::Left => (r, c - 1),
            Move::Up => (r - 1, c),
        };
        if r < 0 || c < 0 {
            return None;
        }
        let next = Cell::new(r as usize, c as usize);
        self.is_free(next).then_some(next)
    }

    /// Start cell of a new episode.
    pub fn grid_reset(&self, rng: &mut RngStream) -> Cell {
        if !self.random_start {
            return self.start;
        }
        let eligible: Vec<Cell> = self.free_cells().into_iter().filter(|&c| c != self.goal).collect();
        eligible[rng.index(eligible.len())]
    }

    pub fn grid_step(&self, cell: Cell, action: usize) -> GridStep {
        match self.neighbour(cell, action) {
            None => GridStep {
                next: cell,
                reward: self.boundary_penalty.unwrap_or(0.0),
                terminal: false,
                hit_boundary: true,
            },
            Some(next) if next == self.goal => GridStep { next, reward: self.goal_reward, terminal: true, hit_boundary: false },
            Some(next) => GridStep { next, reward: 0.0, terminal: false, hit_boundary: false },
        }
    }

    /// Moves on a shortest path to the goal from every free cell.
    pub fn distances(&self) -> Vec<Option<usize>> {
        let cells = self.free_cells();
        let mut dist = vec![None; cells.len()];
        let mut queue = VecDeque::from([self.goal]);
        dist[self.cell_index(self.goal)] = Some(0);
        while let Some(cell) = queue.pop_front() {
            let d = dist[self.cell_index(cell)].unwrap();
            for prev in &cells {
                let reaches = (0..NUM_ACTIONS).any(|a| self.neighbour(*prev, a) == Some(cell));
                let slot = &mut dist[self.cell_index(*prev)];
                if reaches && slot.is_none() {
                    *slot = Some(d + 1);
                    queue.push_back(*prev);
                }
            }
        }
        dist
    }

    pub fn shortest_path(&self) -> Option<usize> {
        self.distances()[self.cell_index(self.start)]
    }

    /// Actions that reduce the distance to the goal by one.
    pub fn optimal_actions(&self, cell: Cell) -> Vec<usize> {
        let dist = self.distances();
        let Some(d) = dist[self.cell_index(cell)] else {
            return Vec::new();
        };
        (0..NUM_ACTIONS)
            .filter(|&a| {
                self.neighbour(cell, a)
                    .is_some_and(|n| dist[self.cell_index(n)] == Some(d.saturating_sub(1)) && d > 0)
            })
            .collect()
    }

    /// Expected uniform-random-walk steps to the goal from every free cell,
    /// from the absorption equations `t(c) = 1 + ¼ Σ_a t(next(c, a))`.
    pub fn hitting_times(&self) -> Result<Vec<f64>> {
        let cells = self.free_cells();
        let n = cells.len();
        let mut m = DMatrix::<f64>::identity(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for (i, &cell) in cells.iter().enumerate() {
            if cell == self.goal {
                continue;
            }
            rhs[i] = 1.0;
            for a in 0..NUM_ACTIONS {
                let next = self.neighbour(cell, a).unwrap_or(cell);
                if next != self.goal {
                    m[(i, self.cell_index(next))] -= 0.25;
                }
            }
        }
        m.lu()
            .solve(&rhs)
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| Error::Degenerate("goal unreachable from some cell".into()))
    }

    pub fn hitting_time(&self) -> Result<f64> {
        Ok(self.hitting_times()?[self.cell_index(self.start)])
    }

    /// Length of one uniform random walk from the start.
    pub fn random_walk_length(&self, rng: &mut RngStream, max_steps: u64) -> u64 {
        let mut cell = self.start;
        for step in 1..=max_steps {
            let out = self.grid_step(cell, rng.index(NUM_ACTIONS));
            if out.terminal {
                return step;
            }
            cell = out.next;
        }
        max_steps
    }

    /// Every layout of the 3×3 grid with its S→G distance and exact
    /// random-walk hitting time, as `(layout, distance, hitting time)`.
    pub fn enumerate_layouts() -> Vec<(GridWorld, usize, f64)> {
        let all: Vec<Cell> = (0..9).map(|i| Cell::new(i / 3, i % 3)).collect();
        let mut out = Vec::new();
        for &obstacle in &all {
            for &goal in &all {
                for &start in &all {
                    let gw = GridWorld { obstacle, start, goal, ..GridWorld::default() };
                    if gw.validate().is_err() {
                        continue;
                    }
                    if let (Some(d), Ok(t)) = (gw.shortest_path(), gw.hitting_time()) {
                        out.push((gw, d, t));
                    }
                }
            }
        }
        out
    }

    /// Policy for each free cell, as produced by `policy(percept label)`.
    pub fn grid_policy_table<F>(&self, mut policy: F) -> Result<Vec<(Cell, [f64; 4])>>
    where
        F: FnMut(usize) -> Result<Vec<f64>>,
    {
        self.free_cells()
            .into_iter()
            .enumerate()
            .map(|(i, cell)| {
                let p = policy(i)?;
                if p.len() != NUM_ACTIONS {
                    return Err(Error::invalid("grid policy must have four entries"));
                }
                Ok((cell, [p[0], p[1], p[2], p[3]]))
            })
            .collect()
    }
}

/// Percept states `|cell⟩⟨cell| ⊗ |φ⟩⟨φ|` on an 8 ⊗ 4 space and the
/// action-register POVM.
#[derive(Debug, Clone)]
pub struct GridEncoding {
    states: Vec<DensityMatrix>,
    povm: PovmSet,
}

impl GridEncoding {
    pub fn new(p_coh: f64) -> Result<Self> {
        let states = (0..8)
            .map(|i| encode_percept_action(i, 8, NUM_ACTIONS, p_coh))
            .collect::<Result<_>>()?;
        Ok(Self { states, povm: povm_action_subsystem(8, NUM_ACTIONS) })
    }

    pub fn state(&self, label: usize) -> &DensityMatrix {
        &self.states[label]
    }

    pub fn povm(&self) -> &PovmSet {
        &self.povm
    }

    pub fn dim(&self) -> usize {
        8 * NUM_ACTIONS
    }
}
