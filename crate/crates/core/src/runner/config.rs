//! Experiment configuration.
//!
//! Configs are TOML documents. Every table rejects unknown keys. A minimal
//! invasion-game config:
//!
//! ```toml
//! name = "demo"
//! seed = 7
//! ensemble = 20
//! budget = 2000
//! record_every = 100
//! metrics = ["reward"]
//!
//! [environment.invasion]
//! variant = "two_symbol"
//! reward_correct = 1.0
//! reward_wrong = -1.0
//!
//! [agent]
//! alpha = 1e-3
//! eta = 1.0
//! controls = 16
//! hamiltonians = "case_i"
//!
//! [[curves]]
//! label = "controls_4"
//! controls = 4
//! ```
//!
//! Each `[[curves]]` entry overrides a few fields of the base config and
//! produces one output file. Without curves the base config is run once
//! under its own name.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::baselines::PolicyKind;
use crate::environments::{BasisMode, GridWorld, InvasionConfig};
use crate::error::{Error, Result};
use crate::estimators::GradientMode;

/// Episodes longer than this are cut off and flagged as truncated.
pub const DEFAULT_MAX_EPISODE_LEN: u64 = 10_000;

/// Quantity recorded per cycle (invasion) or per episode (grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Reward,
    /// Average gate fidelity between memory and target.
    Fidelity,
    /// Squared Frobenius distance between memory and target.
    Distance,
    /// Euclidean length of the control vector.
    ControlNorm,
    EpisodeLength,
}

impl Metric {
    /// Column stem in CSV output.
    pub fn column(self) -> &'static str {
        match self {
            Metric::Reward => "reward",
            Metric::Fidelity => "F",
            Metric::Distance => "D",
            Metric::ControlNorm => "h_norm",
            Metric::EpisodeLength => "length",
        }
    }

    pub(crate) fn needs_memory(self) -> bool {
        matches!(self, Metric::Fidelity | Metric::Distance | Metric::ControlNorm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Glow,
    Ps,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianCase {
    /// Two random Hermitian matrices on the full space.
    CaseI,
    /// Local terms plus a product interaction on `S ⊗ A`.
    CaseIi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsConfig {
    #[serde(default)]
    pub gamma_damp: f64,
    #[serde(default = "unit")]
    pub h_eq: f64,
    #[serde(default = "softmax")]
    pub policy: PolicyKind,
}

impl Default for PsConfig {
    fn default() -> Self {
        Self { gamma_damp: 0.0, h_eq: 1.0, policy: PolicyKind::Softmax }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    #[serde(default = "glow")]
    pub kind: AgentKind,
    pub alpha: f64,
    pub eta: f64,
    #[serde(default)]
    pub kappa: f64,
    pub controls: usize,
    pub hamiltonians: HamiltonianCase,
    /// Multiplies both drawn generators. Scaling by s acts like a rate α·s² for small steps.
    #[serde(default = "unit")]
    pub hamiltonian_scale: f64,
    /// Orthonormalize the two generators before building the stack.
    #[serde(default)]
    pub schmidt: bool,
    /// Draw one Hamiltonian pair for the whole experiment instead of one per agent.
    #[serde(default = "yes")]
    pub shared_hamiltonians: bool,
    /// Clear the eligibility trace at the start of every episode.
    #[serde(default = "yes")]
    pub reset_glow: bool,
    /// When false every reward reaches the learner as 0.
    #[serde(default = "yes")]
    pub learning: bool,
    #[serde(default)]
    pub gradient: GradientMode,
    #[serde(default)]
    pub ps: PsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub world: GridWorld,
    #[serde(default = "unit")]
    pub p_coh: f64,
    #[serde(default = "max_len")]
    pub max_episode_len: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { world: GridWorld::default(), p_coh: 1.0, max_episode_len: DEFAULT_MAX_EPISODE_LEN }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentConfig {
    Invasion(InvasionConfig),
    Grid(GridConfig),
}

impl EnvironmentConfig {
    /// Memory dimension.
    pub fn dim(&self) -> usize {
        match self {
            EnvironmentConfig::Invasion(c) => c.dim(),
            EnvironmentConfig::Grid(_) => 32,
        }
    }

    /// `(dim_S, dim_A)` factorization used by case II Hamiltonians.
    pub fn factors(&self) -> (usize, usize) {
        match self {
            EnvironmentConfig::Invasion(c) => (c.dim() / 2, 2),
            EnvironmentConfig::Grid(_) => (8, 4),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            EnvironmentConfig::Invasion(c) => c.num_actions(),
            EnvironmentConfig::Grid(_) => 4,
        }
    }

    /// Number of classical percept labels seen by tabular learners.
    pub fn num_percepts(&self) -> usize {
        match self {
            EnvironmentConfig::Invasion(c) => match c.variant {
                crate::environments::InvasionVariant::FourPercept4Act
                | crate::environments::InvasionVariant::FourPercept2Act => 4,
                _ => 2,
            },
            EnvironmentConfig::Grid(g) => g.world.free_cells().len(),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, EnvironmentConfig::Grid(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvironmentConfig::Invasion(c) => c.validate(),
            EnvironmentConfig::Grid(g) => {
                g.world.validate()?;
                if !(0.0..=1.0).contains(&g.p_coh) {
                    return Err(Error::invalid("p_coh outside [0, 1]"));
                }
                if g.max_episode_len == 0 {
                    return Err(Error::invalid("max_episode_len must be positive"));
                }
                Ok(())
            }
        }
    }
}

/// Per-curve overrides of the base config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub label: String,
    pub controls: Option<usize>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub kind: Option<AgentKind>,
    pub learning: Option<bool>,
    pub budget: Option<u64>,
    pub p_coh: Option<f64>,
    pub reversal_cycle: Option<u64>,
    pub basis_mode: Option<BasisMode>,
    pub boundary_penalty: Option<f64>,
    pub random_start: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "desk_ensemble")]
    pub ensemble: usize,
    /// Cycles (invasion) or episodes (grid) per agent.
    pub budget: u64,
    /// Width of the averaging window behind each output row.
    #[serde(default = "one")]
    pub record_every: u64,
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub environment: EnvironmentConfig,
    pub agent: AgentConfig,
    #[serde(default)]
    pub curves: Vec<CurveSpec>,
}

/// A fully resolved single curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub experiment: String,
    pub label: String,
    pub seed: u64,
    pub ensemble: usize,
    pub budget: u64,
    pub record_every: u64,
    pub metrics: Vec<Metric>,
    pub environment: EnvironmentConfig,
    pub agent: AgentConfig,
}

impl CurveConfig {
    /// Name of the x column.
    pub fn x_name(&self) -> &'static str {
        if self.environment.is_grid() {
            "episode"
        } else {
            "cycle"
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config(format!("{}: budget must be positive", self.label)));
        }
        if self.ensemble == 0 {
            return Err(Error::Config(format!("{}: ensemble must be positive", self.label)));
        }
        if self.record_every == 0 {
            return Err(Error::Config(format!("{}: record_every must be positive", self.label)));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config(format!("{}: no metrics requested", self.label)));
        }
        self.environment.validate().map_err(config_err(&self.label))?;
        let a = &self.agent;
        if a.kind == AgentKind::Glow {
            if a.controls == 0 {
                return Err(Error::Config(format!("{}: need at least one control", self.label)));
            }
            crate::agent::GlowParams { alpha: a.alpha, eta: a.eta, kappa: a.kappa }
                .validate()
                .map_err(config_err(&self.label))?;
        } else if self.metrics.iter().any(|m| m.needs_memory()) {
            return Err(Error::Config(format!("{}: memory metrics need a glow agent", self.label)));
        }
        for m in &self.metrics {
            let ok = match m {
                Metric::EpisodeLength => self.environment.is_grid(),
                Metric::Fidelity | Metric::Distance => !self.environment.is_grid(),
                _ => true,
            };
            if !ok {
                return Err(Error::Config(format!("{}: metric {:?} not available here", self.label, m)));
            }
        }
        Ok(())
    }
}

fn config_err(label: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Config(format!("{label}: {e}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Expands the curve overrides. Each result is validated.
    pub fn resolve(&self) -> Result<Vec<CurveConfig>> {
        let base = CurveSpec { label: self.name.clone(), ..CurveSpec::default() };
        let specs = if self.curves.is_empty() { std::slice::from_ref(&base) } else { &self.curves[..] };
        let mut out = Vec::with_capacity(specs.len());
        for spec in specs {
            let curve = self.apply(spec)?;
            curve.validate()?;
            if out.iter().any(|c: &CurveConfig| c.label == curve.label) {
                return Err(Error::Config(format!("duplicate curve label {}", curve.label)));
            }
            out.push(curve);
        }
        Ok(out)
    }

    fn apply(&self, spec: &CurveSpec) -> Result<CurveConfig> {
        let mut agent = self.agent.clone();
        let mut environment = self.environment.clone();
        if let Some(v) = spec.controls {
            agent.controls = v;
        }
        if let Some(v) = spec.alpha {
            agent.alpha = v;
        }
        if let Some(v) = spec.eta {
            agent.eta = v;
        }
        if let Some(v) = spec.kind {
            agent.kind = v;
        }
        if let Some(v) = spec.learning {
            agent.learning = v;
        }
        let label = &spec.label;
        let mismatch = |field: &str| Error::Config(format!("{label}: {field} does not apply to this environment"));
        match &mut environment {
            EnvironmentConfig::Invasion(c) => {
                if let Some(v) = spec.p_coh {
                    c.p_coh = v;
                }
                if let Some(v) = spec.reversal_cycle {
                    c.reversal_cycle = Some(v);
                }
                if let Some(v) = spec.basis_mode {
                    c.basis_mode = v;
                }
                if spec.boundary_penalty.is_some() {
                    return Err(mismatch("boundary_penalty"));
                }
                if spec.random_start.is_some() {
                    return Err(mismatch("random_start"));
                }
            }
            EnvironmentConfig::Grid(g) => {
                if let Some(v) = spec.p_coh {
                    g.p_coh = v;
                }
                if let Some(v) = spec.boundary_penalty {
                    g.world.boundary_penalty = Some(v);
                }
                if let Some(v) = spec.random_start {
                    g.world.random_start = v;
                }
                if spec.reversal_cycle.is_some() {
                    return Err(mismatch("reversal_cycle"));
                }
                if spec.basis_mode.is_some() {
                    return Err(mismatch("basis_mode"));
                }
            }
        }
        Ok(CurveConfig {
            experiment: self.name.clone(),
            label: spec.label.clone(),
            seed: self.seed,
            ensemble: self.ensemble,
            budget: spec.budget.unwrap_or(self.budget),
            record_every: self.record_every,
            metrics: self.metrics.clone(),
            environment,
            agent,
        })
    }
}

fn unit() -> f64 {
    1.0
}

fn one() -> u64 {
    1
}

fn yes() -> bool {
    true
}

fn glow() -> AgentKind {
    AgentKind::Glow
}

fn softmax() -> PolicyKind {
    PolicyKind::Softmax
}

fn max_len() -> u64 {
    DEFAULT_MAX_EPISODE_LEN
}

fn desk_ensemble() -> usize {
    100
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"
name = "demo"
seed = 7
ensemble = 20
budget = 2000
record_every = 100
metrics = ["reward"]

[environment.invasion]
variant = "two_symbol"
reward_correct = 1.0
reward_wrong = -1.0

[agent]
alpha = 1e-3
eta = 1.0
controls = 16
hamiltonians = "case_i"

[[curves]]
label = "controls_4"
controls = 4

[[curves]]
label = "mixed"
p_coh = 0.5
"#;

    #[test]
    fn parses_documented_example() {
        let cfg = ExperimentConfig::from_toml(DEMO).unwrap();
        let curves = cfg.resolve().unwrap();
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].agent.controls, 4);
        assert_eq!(curves[1].agent.controls, 16);
        match &curves[1].environment {
            EnvironmentConfig::Invasion(c) => assert_eq!(c.p_coh, 0.5),
            _ => panic!("wrong environment"),
        }
        assert!(curves[0].agent.reset_glow);
        assert_eq!(curves[0].agent.gradient, GradientMode::Analytic);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml(DEMO).unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = DEMO.replace("record_every = 100", "record_every = 100\ncolour = 3");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
        let bad = DEMO.replace("controls = 16", "controls = 16\nbeta = 1.0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = DEMO.replace("reward_wrong = -1.0", "reward_wrong = -1.0\nglow = 1");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn estimator_table_parses() {
        let text = DEMO.replace(
            "hamiltonians = \"case_i\"",
            "hamiltonians = \"case_i\"\n\n[agent.gradient]\nmode = \"samples\"\ndelta = 0.01\nm = 50",
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.agent.gradient, GradientMode::Samples { delta: 0.01, m: 50 });
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ExperimentConfig::from_toml(DEMO).unwrap();
        cfg.budget = 0;
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));

        let mut cfg = ExperimentConfig::from_toml(DEMO).unwrap();
        cfg.curves[0].boundary_penalty = Some(-1.0);
        assert!(cfg.resolve().is_err());

        let mut cfg = ExperimentConfig::from_toml(DEMO).unwrap();
        cfg.metrics = vec![Metric::EpisodeLength];
        assert!(cfg.resolve().is_err());

        let mut cfg = ExperimentConfig::from_toml(DEMO).unwrap();
        cfg.curves[1].label = "controls_4".into();
        assert!(cfg.resolve().is_err());
    }
}
