//! Named experiment presets, one per published figure panel.
//!
//! Ensembles default to 100 agents; pass `--agents 1000` for the full-size
//! averages. Budgets are the full run lengths.

use super::config::{
    AgentConfig, AgentKind, CurveSpec, EnvironmentConfig, ExperimentConfig, GridConfig, HamiltonianCase, Metric,
};
use crate::environments::{BasisMode, GridWorld, InvasionConfig, InvasionVariant};
use crate::error::{Error, Result};
use crate::estimators::GradientMode;

use crate::baselines::PolicyKind;
use super::config::PsConfig;

/// Controls in every grid-world memory.
pub const GRID_CONTROLS: usize = 128;

/// Generator scale for grid-world memories.
pub const GRID_HAMILTONIAN_SCALE: f64 = 0.547_722_557_505_166_1;

/// Generator scale for the four-percept invasion memories.
pub const FOUR_PERCEPT_HAMILTONIAN_SCALE: f64 = 2.0;

const DESK_ENSEMBLE: usize = 100;

fn glow(alpha: f64, eta: f64, controls: usize, case: HamiltonianCase) -> AgentConfig {
    AgentConfig {
        kind: AgentKind::Glow,
        alpha,
        eta,
        kappa: 0.0,
        controls,
        hamiltonians: case,
        hamiltonian_scale: 1.0,
        schmidt: false,
        shared_hamiltonians: true,
        reset_glow: true,
        learning: true,
        gradient: GradientMode::Analytic,
        ps: PsConfig { gamma_damp: 0.0, h_eq: 1.0, policy: PolicyKind::Softmax },
    }
}

fn four_percept_glow(controls: usize) -> AgentConfig {
    AgentConfig { hamiltonian_scale: FOUR_PERCEPT_HAMILTONIAN_SCALE, ..glow(1e-2, 1.0, controls, HamiltonianCase::CaseIi) }
}

fn invasion(variant: InvasionVariant, reward_wrong: f64) -> InvasionConfig {
    InvasionConfig::new(variant, 1.0, reward_wrong)
}

fn curve(label: impl Into<String>) -> CurveSpec {
    CurveSpec { label: label.into(), ..CurveSpec::default() }
}

fn control_curves(counts: &[usize]) -> Vec<CurveSpec> {
    counts.iter().map(|&n| CurveSpec { controls: Some(n), ..curve(format!("controls_{n}")) }).collect()
}

fn base(name: &str, budget: u64, record_every: u64, metrics: Vec<Metric>, env: EnvironmentConfig, agent: AgentConfig) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed: 1,
        ensemble: DESK_ENSEMBLE,
        budget,
        record_every,
        metrics,
        output: None,
        environment: env,
        agent,
        curves: Vec::new(),
    }
}

fn grid(boundary_penalty: Option<f64>) -> EnvironmentConfig {
    EnvironmentConfig::Grid(GridConfig {
        world: GridWorld { boundary_penalty, ..GridWorld::default() },
        ..GridConfig::default()
    })
}

fn grid_single(name: &str, eta: f64, boundary_penalty: Option<f64>) -> ExperimentConfig {
    let mut cfg = base(
        name,
        10_000,
        1,
        vec![Metric::EpisodeLength],
        grid(boundary_penalty),
        glow(0.1, eta, GRID_CONTROLS, HamiltonianCase::CaseI),
    );
    cfg.ensemble = 1;
    cfg.agent.hamiltonian_scale = GRID_HAMILTONIAN_SCALE;
    cfg
}

/// Every preset, in display order.
pub fn preset_catalog() -> Vec<(&'static str, ExperimentConfig)> {
    use HamiltonianCase::*;
    use InvasionVariant::*;
    let mut out = Vec::new();

    let mut c = base(
        "fig5a",
        4_000,
        100,
        vec![Metric::Reward],
        EnvironmentConfig::Invasion(invasion(TwoSymbol, -1.0)),
        glow(1e-3, 1.0, 16, CaseI),
    );
    c.curves = control_curves(&[1, 2, 3, 4, 8, 16]);
    out.push(("fig5a", c));

    let mut env = invasion(TwoSymbol, -1.0);
    env.reversal_cycle = Some(4_000);
    let mut c = base("fig5b", 8_000, 100, vec![Metric::Reward], EnvironmentConfig::Invasion(env), glow(1e-3, 1.0, 16, CaseI));
    c.curves = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&p| CurveSpec { p_coh: Some(p), ..curve(format!("p_coh_{p}")) })
        .collect();
    out.push(("fig5b", c));

    out.push((
        "fig5c",
        base(
            "fig5c",
            10_000,
            100,
            vec![Metric::Reward],
            EnvironmentConfig::Invasion(invasion(TwoSymbol, -1.0)),
            glow(1e-3, 1.0, 32, CaseIi),
        ),
    ));

    let mut env = invasion(FourPercept4Act, -10.0);
    env.reversal_cycle = Some(5_000);
    let mut c = base("fig7a", 10_000, 100, vec![Metric::Reward], EnvironmentConfig::Invasion(env), four_percept_glow(16));
    c.curves = control_curves(&[1, 2, 3, 4, 8, 16, 32]);
    out.push(("fig7a", c));

    let mut env = invasion(FourPercept2Act, -10.0);
    env.color_introduction_cycle = Some(5_000);
    let mut c = base("fig7b", 10_000, 100, vec![Metric::Reward], EnvironmentConfig::Invasion(env), four_percept_glow(16));
    c.curves = control_curves(&[1, 2, 3, 4, 8, 16, 32]);
    out.push(("fig7b", c));

    let mut c = base(
        "fig8",
        20_000,
        100,
        vec![Metric::Reward, Metric::Fidelity, Metric::Distance],
        EnvironmentConfig::Invasion(invasion(FourPercept4Act, -10.0)),
        four_percept_glow(16),
    );
    c.curves = vec![
        CurveSpec { basis_mode: Some(BasisMode::SingleOnb), ..curve("single_onb") },
        CurveSpec { basis_mode: Some(BasisMode::RandomOnbPerCycle), ..curve("multi_onb") },
    ];
    out.push(("fig8", c));

    let mut agent = glow(1e-2, 1.0, 64, CaseI);
    agent.schmidt = true;
    let mut c = base(
        "fig9",
        1_000_000,
        1_000,
        vec![Metric::Reward, Metric::ControlNorm],
        EnvironmentConfig::Invasion(invasion(NeverendingColor, -10.0)),
        agent,
    );
    c.ensemble = 1;
    out.push(("fig9", c));

    let mut c = grid_single("fig10", 0.7, Some(-10.0));
    c.record_every = 100;
    c.curves = vec![
        curve("fixed_start"),
        CurveSpec { random_start: Some(true), budget: Some(100_000), ..curve("random_start") },
    ];
    out.push(("fig10", c));

    out.push(("fig11a", grid_single("fig11a", 1.0, None)));
    out.push(("fig11b", grid_single("fig11b", 0.01, None)));
    out.push(("fig11c", grid_single("fig11c", 1.0, Some(-10.0))));
    out.push(("fig11d", grid_single("fig11d", 0.7, Some(-10.0))));
    out.push(("fig11e", grid_single("fig11e", 0.5, Some(-10.0))));
    let mut c = grid_single("fig11f", 1.0, None);
    c.agent.learning = false;
    out.push(("fig11f", c));

    let mut c = grid_single("fig12", 1.0, None);
    c.record_every = 100;
    c.curves = FIG12_ETAS
        .iter()
        .flat_map(|&eta| {
            [
                CurveSpec { eta: Some(eta), ..curve(format!("goal_eta_{eta}")) },
                CurveSpec { eta: Some(eta), boundary_penalty: Some(-10.0), ..curve(format!("penalty_eta_{eta}")) },
            ]
        })
        .collect();
    out.push(("fig12", c));

    out
}

/// Glow parameters sampled along the η axis of the summary plot.
pub const FIG12_ETAS: [f64; 5] = [1.0, 0.9, 0.7, 0.5, 0.3];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    preset_catalog()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c)
        .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))
}

pub fn preset_names() -> Vec<&'static str> {
    preset_catalog().into_iter().map(|(n, _)| n).collect()
}
