//! Experiment orchestration: configs, presets, seeded ensembles and CSV output.

pub mod config;
mod ensemble;
mod output;
pub mod presets;
pub mod verify;

use std::path::{Path, PathBuf};

pub use config::{
    AgentConfig, AgentKind, CurveConfig, CurveSpec, EnvironmentConfig, ExperimentConfig, GridConfig, HamiltonianCase,
    Metric, PsConfig,
};
pub use ensemble::{
    glow_tail_average, mean_sem, run_curve, run_ensemble, run_grid_episode, AgentTrace, CurveRecord, CurveResult,
    CycleLedger, Learner, MeanSem, NeumaierSum,
};
pub use output::{emit_csv, format_float, tail_stats, write_curve, write_policy_table, write_summary, TAIL_WINDOW};
pub use presets::{preset, preset_catalog, preset_names};

use crate::environments::{Cell, GridEncoding, GridWorld};
use crate::error::Result;

/// Command-line overrides applied on top of a preset.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub agents: Option<usize>,
    /// Replaces the budget of every curve.
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.agents {
            self.ensemble = n;
        }
        if let Some(b) = o.budget {
            self.budget = b;
            self.curves.iter_mut().for_each(|c| c.budget = None);
        }
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
        self
    }
}

/// Writes one CSV and manifest per curve plus `summary.csv` into
/// `dir/<experiment name>/`. Returns the written CSV paths.
pub fn write_experiment(results: &[CurveResult], name: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    let dir = dir.join(name);
    let mut paths = results.iter().map(|r| write_curve(r, &dir)).collect::<Result<Vec<_>>>()?;
    let summary = dir.join("summary.csv");
    write_summary(results, &summary)?;
    paths.push(summary);
    Ok(paths)
}

/// Action distribution of a trained learner in every free cell.
pub fn grid_policy(learner: &Learner, world: &GridWorld, p_coh: f64) -> Result<Vec<(Cell, [f64; 4])>> {
    let encoding = GridEncoding::new(p_coh)?;
    world.grid_policy_table(|label| match learner {
        Learner::Glow(agent) => agent.distribution(encoding.state(label), encoding.povm()),
        Learner::Ps(table) => table.ps_policy(label),
        Learner::RandomWalk { num_actions } => Ok(vec![1.0 / *num_actions as f64; *num_actions]),
    })
}
