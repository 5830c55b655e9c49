//! Task suite: the invasion-game family and a 3×3 grid world.

pub mod grid;
pub mod invasion;

pub use grid::{Cell, GridEncoding, GridStep, GridWorld, Move};
pub use invasion::{
    correct_action, invasion_step, Attack, BasisMode, InvasionConfig, InvasionGame, InvasionPercept,
    InvasionVariant,
};

/// One percept → action → reward interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: u64,
    pub percept: usize,
    pub action: usize,
    pub reward: f64,
    pub distribution: Vec<f64>,
}

/// Cycles of one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeLog {
    pub records: Vec<CycleRecord>,
    /// Set when the episode was cut off before reaching a terminal state.
    pub truncated: bool,
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.records.iter().map(|r| r.reward).sum()
    }
}
