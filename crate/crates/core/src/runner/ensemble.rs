use std::sync::Arc;

use rayon::prelude::*;

use super::config::{AgentConfig, AgentKind, CurveConfig, EnvironmentConfig, ExperimentConfig, GridConfig, HamiltonianCase, Metric};
use crate::agent::{GlowAgent, GlowParams};
use crate::baselines::EdgeTable;
use crate::environments::{Cell, CycleRecord, EpisodeLog, GridEncoding, GridWorld, InvasionGame};
use crate::error::{Error, Result};
use crate::estimators::GradientMode;
use crate::memory::{case_i_hamiltonians, case_ii_hamiltonians, schmidt_orthonormalize, HamiltonianStack};
use crate::metrics::{avg_fidelity, distance_sq};
use crate::qmath::{CMatrix, Complex64, RngStream};

/// Stream ids at or above this value belong to the experiment, below it to agents.
const EXPERIMENT_STREAMS: u64 = 1 << 63;

/// Purpose tags mixed into stream ids.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Hamiltonians = 0,
    Target = 1,
    Play = 2,
}

fn experiment_stream(seed: u64, purpose: Purpose) -> RngStream {
    RngStream::new(seed, EXPERIMENT_STREAMS | purpose as u64)
}

/// Stream `(agent << 8) | purpose`, so adding agents never shifts existing ones.
fn agent_stream(seed: u64, agent: usize, purpose: Purpose) -> RngStream {
    RngStream::new(seed, ((agent as u64) << 8) | purpose as u64)
}

/// Ensemble mean and standard error of one metric at one x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSem {
    pub mean: f64,
    /// `NaN` for a single agent.
    pub sem: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    /// Cycles or episodes completed.
    pub x: u64,
    /// One entry per requested metric, in config order.
    pub stats: Vec<MeanSem>,
}

/// External cycles are environment interactions; internal cycles are extra
/// device queries spent by sampled gradient estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct CycleLedger {
    pub external: u64,
    pub internal: u64,
    pub episodes: u64,
    pub truncated_episodes: u64,
}

impl CycleLedger {
    pub fn total(&self) -> u64 {
        self.external + self.internal
    }

    fn add(&mut self, other: &CycleLedger) {
        self.external += other.external;
        self.internal += other.internal;
        self.episodes += other.episodes;
        self.truncated_episodes += other.truncated_episodes;
    }
}

/// Any of the learners the runner can drive.
#[derive(Debug, Clone)]
pub enum Learner {
    Glow(GlowAgent),
    Ps(EdgeTable),
    RandomWalk { num_actions: usize },
}

impl Learner {
    pub fn as_glow(&self) -> Option<&GlowAgent> {
        match self {
            Learner::Glow(a) => Some(a),
            _ => None,
        }
    }
}

/// Everything one agent produced.
#[derive(Debug, Clone)]
pub struct AgentTrace {
    /// `series[m][i]` is metric `m` averaged over record window `i`.
    pub series: Vec<Vec<f64>>,
    /// Raw episode lengths (grid only).
    pub episode_lengths: Vec<f64>,
    pub ledger: CycleLedger,
    pub learner: Learner,
}

#[derive(Debug, Clone)]
pub struct CurveResult {
    pub config: CurveConfig,
    pub records: Vec<CurveRecord>,
    pub agents: Vec<AgentTrace>,
    pub ledger: CycleLedger,
    /// Target unitary of the four-percept variants.
    pub target: Option<CMatrix>,
}

impl CurveResult {
    /// Final record's mean for `metric`.
    pub fn final_mean(&self, metric: Metric) -> Option<f64> {
        let idx = self.config.metrics.iter().position(|&m| m == metric)?;
        self.records.last().map(|r| r.stats[idx].mean)
    }

    /// Column of means for `metric`.
    pub fn means(&self, metric: Metric) -> Option<Vec<f64>> {
        let idx = self.config.metrics.iter().position(|&m| m == metric)?;
        Some(self.records.iter().map(|r| r.stats[idx].mean).collect())
    }
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and standard error with two compensated passes in input order.
pub fn mean_sem(values: &[f64]) -> MeanSem {
    let n = values.len();
    if n == 0 {
        return MeanSem { mean: f64::NAN, sem: f64::NAN };
    }
    let mut s = NeumaierSum::default();
    values.iter().for_each(|&v| s.add(v));
    let mean = s.value() / n as f64;
    if n == 1 {
        return MeanSem { mean, sem: f64::NAN };
    }
    let mut sq = NeumaierSum::default();
    values.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
    let var = sq.value() / (n - 1) as f64;
    MeanSem { mean, sem: (var / n as f64).sqrt() }
}

/// Mean of the last `window` episode lengths.
pub fn glow_tail_average(episode_lengths: &[f64], window: usize) -> Result<f64> {
    if window == 0 || episode_lengths.len() < window {
        return Err(Error::invalid(format!(
            "need at least {window} episodes, got {}",
            episode_lengths.len()
        )));
    }
    let mut s = NeumaierSum::default();
    episode_lengths[episode_lengths.len() - window..].iter().for_each(|&v| s.add(v));
    Ok(s.value() / window as f64)
}

/// Runs every curve of an experiment in order.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<Vec<CurveResult>> {
    cfg.resolve()?.iter().map(run_curve).collect()
}

/// Runs one curve; agents run in parallel and are aggregated in index order.
pub fn run_curve(cfg: &CurveConfig) -> Result<CurveResult> {
    cfg.validate()?;
    let shared = if cfg.agent.shared_hamiltonians {
        Some(draw_hamiltonians(&cfg.agent, &cfg.environment, &mut experiment_stream(cfg.seed, Purpose::Hamiltonians))?)
    } else {
        None
    };
    let game = match &cfg.environment {
        EnvironmentConfig::Invasion(c) => {
            let mut rng = experiment_stream(cfg.seed, Purpose::Target);
            Some(InvasionGame::with_random_target(c.clone(), &mut rng)?)
        }
        EnvironmentConfig::Grid(_) => None,
    };
    let agents: Vec<AgentTrace> = (0..cfg.ensemble)
        .into_par_iter()
        .map(|i| {
            let pair = match &shared {
                Some(p) => p.clone(),
                None => draw_hamiltonians(&cfg.agent, &cfg.environment, &mut agent_stream(cfg.seed, i, Purpose::Hamiltonians))?,
            };
            let learner = build_learner(&cfg.agent, &cfg.environment, pair)?;
            let mut rng = agent_stream(cfg.seed, i, Purpose::Play);
            match (&cfg.environment, &game) {
                (EnvironmentConfig::Invasion(_), Some(game)) => run_invasion_agent(cfg, game, learner, &mut rng),
                (EnvironmentConfig::Grid(g), _) => run_grid_agent(cfg, g, learner, &mut rng),
                _ => unreachable!("invasion game is built for invasion configs"),
            }
        })
        .collect::<Result<_>>()?;

    let n_records = agents[0].series[0].len();
    let records = (0..n_records)
        .map(|i| CurveRecord {
            x: ((i as u64 + 1) * cfg.record_every).min(cfg.budget),
            stats: (0..cfg.metrics.len())
                .map(|m| mean_sem(&agents.iter().map(|a| a.series[m][i]).collect::<Vec<_>>()))
                .collect(),
        })
        .collect();
    let mut ledger = CycleLedger::default();
    agents.iter().for_each(|a| ledger.add(&a.ledger));
    let target = game.filter(|g| g.config().uses_target()).map(|g| g.target().clone());
    Ok(CurveResult { config: cfg.clone(), records, agents, ledger, target })
}

type HamiltonianPair = Arc<(CMatrix, CMatrix)>;

fn draw_hamiltonians(agent: &AgentConfig, env: &EnvironmentConfig, rng: &mut RngStream) -> Result<HamiltonianPair> {
    let (h1, h2) = match agent.hamiltonians {
        HamiltonianCase::CaseI => case_i_hamiltonians(env.dim(), rng),
        HamiltonianCase::CaseIi => {
            let (s, a) = env.factors();
            case_ii_hamiltonians(s, a, rng)
        }
    };
    let (h1, h2) = if agent.schmidt { schmidt_orthonormalize(&h1, &h2)? } else { (h1, h2) };
    let s = Complex64::from(agent.hamiltonian_scale);
    Ok(Arc::new((h1 * s, h2 * s)))
}

fn build_learner(agent: &AgentConfig, env: &EnvironmentConfig, pair: HamiltonianPair) -> Result<Learner> {
    Ok(match agent.kind {
        AgentKind::Glow => {
            let stack = HamiltonianStack::alternating(pair.0.clone(), pair.1.clone(), agent.controls)?;
            let params = GlowParams { alpha: agent.alpha, eta: agent.eta, kappa: agent.kappa };
            Learner::Glow(GlowAgent::new(Arc::new(stack), params)?)
        }
        AgentKind::Ps => Learner::Ps(EdgeTable::new(
            env.num_percepts(),
            env.num_actions(),
            agent.ps.gamma_damp,
            agent.ps.h_eq,
            agent.eta,
            agent.ps.policy,
        )?),
        AgentKind::RandomWalk => Learner::RandomWalk { num_actions: env.num_actions() },
    })
}

/// Per-window aggregation. Averaged metrics are summed over the window;
/// snapshot metrics keep only the value at the window's last step.
struct Windows {
    sums: Vec<NeumaierSum>,
    snapshot: Vec<bool>,
    count: u64,
    seen: u64,
    width: u64,
    budget: u64,
    series: Vec<Vec<f64>>,
}

impl Windows {
    fn new(snapshot: Vec<bool>, width: u64, budget: u64) -> Self {
        let n = budget.div_ceil(width) as usize;
        Self {
            sums: vec![NeumaierSum::default(); snapshot.len()],
            series: vec![Vec::with_capacity(n); snapshot.len()],
            snapshot,
            count: 0,
            seen: 0,
            width,
            budget,
        }
    }

    fn for_metrics(metrics: &[Metric], width: u64, budget: u64) -> Self {
        Self::new(metrics.iter().map(|m| m.needs_memory()).collect(), width, budget)
    }

    /// `value(m)` is only called for snapshot metrics on a window's last step.
    fn step(&mut self, mut value: impl FnMut(usize) -> Result<f64>) -> Result<()> {
        self.count += 1;
        self.seen += 1;
        let closes = self.count == self.width || self.seen == self.budget;
        for m in 0..self.sums.len() {
            if !self.snapshot[m] {
                self.sums[m].add(value(m)?);
            } else if closes {
                self.sums[m] = NeumaierSum::default();
                self.sums[m].add(value(m)?);
            }
        }
        if closes {
            for m in 0..self.sums.len() {
                let div = if self.snapshot[m] { 1.0 } else { self.count as f64 };
                self.series[m].push(self.sums[m].value() / div);
                self.sums[m] = NeumaierSum::default();
            }
            self.count = 0;
        }
        Ok(())
    }

    fn finish(self) -> Vec<Vec<f64>> {
        self.series
    }
}

/// Memory-derived metric values; only evaluated when a record needs them.
fn memory_metric(metric: Metric, learner: &Learner, target: Option<&CMatrix>) -> Result<f64> {
    let agent = learner.as_glow().ok_or_else(|| Error::invalid("memory metric without a glow agent"))?;
    match metric {
        Metric::ControlNorm => Ok(agent.controls().norm()),
        Metric::Fidelity | Metric::Distance => {
            let u = agent.stack().unitary(agent.controls())?;
            let t = target.ok_or_else(|| Error::invalid("fidelity needs a target unitary"))?;
            if metric == Metric::Fidelity {
                avg_fidelity(&u, t)
            } else {
                distance_sq(&u, t)
            }
        }
        _ => unreachable!("not a memory metric"),
    }
}

/// Chooses an action for percept `label` / state `rho`, returning
/// `(action, distribution, internal cycles)`. `reuse` marks percepts whose
/// state depends on the label alone, so glow passes may be cached.
fn act(
    learner: &mut Learner,
    label: usize,
    rho: &crate::qmath::DensityMatrix,
    povm: &crate::policy::PovmSet,
    mode: &GradientMode,
    reuse: bool,
    rng: &mut RngStream,
) -> Result<(usize, Vec<f64>, u64)> {
    match learner {
        Learner::Glow(agent) if reuse && matches!(mode, GradientMode::Analytic) => {
            let (a, d) = agent.step_labeled(label, rho, povm, rng)?;
            Ok((a, d, 0))
        }
        Learner::Glow(agent) => agent.step_with(rho, povm, mode, rng),
        Learner::Ps(table) => {
            let dist = table.ps_policy(label)?;
            let a = crate::policy::sample_action(&dist, rng);
            Ok((a, dist, 0))
        }
        Learner::RandomWalk { num_actions } => {
            let n = *num_actions;
            Ok((rng.index(n), vec![1.0 / n as f64; n], 0))
        }
    }
}

fn learn(learner: &mut Learner, label: usize, action: usize, reward: f64) {
    match learner {
        Learner::Glow(agent) => agent.apply_reward(reward),
        Learner::Ps(table) => table.ps_update(label, action, reward),
        Learner::RandomWalk { .. } => {}
    }
}

fn start_episode(learner: &mut Learner, reset_glow: bool) {
    if !reset_glow {
        return;
    }
    match learner {
        Learner::Glow(agent) => agent.reset_episode(),
        Learner::Ps(table) => table.reset_glow(),
        Learner::RandomWalk { .. } => {}
    }
}

fn run_invasion_agent(cfg: &CurveConfig, game: &InvasionGame, mut learner: Learner, rng: &mut RngStream) -> Result<AgentTrace> {
    let mut windows = Windows::for_metrics(&cfg.metrics, cfg.record_every, cfg.budget);
    let mut ledger = CycleLedger::default();
    let target = game.config().uses_target().then(|| game.target());
    for cycle in 0..cfg.budget {
        start_episode(&mut learner, cfg.agent.reset_glow);
        let percept = game.invasion_percept(cycle, rng)?;
        let label = percept.attack.label();
        let (action, _, internal) = act(&mut learner, label, &percept.rho, &percept.povm, &cfg.agent.gradient, false, rng)?;
        let reward = game.reward(cycle, action, percept.attack);
        learn(&mut learner, label, action, if cfg.agent.learning { reward } else { 0.0 });
        ledger.external += 1;
        ledger.internal += internal;
        ledger.episodes += 1;

        windows.step(|m| match cfg.metrics[m] {
            Metric::Reward => Ok(reward),
            other => memory_metric(other, &learner, target),
        })?;
    }
    Ok(AgentTrace { series: windows.finish(), episode_lengths: Vec::new(), ledger, learner })
}

/// One grid episode. The agent's trace is cleared first when `reset_glow` is set.
pub fn run_grid_episode(
    learner: &mut Learner,
    world: &GridWorld,
    encoding: &GridEncoding,
    agent: &AgentConfig,
    max_len: u64,
    rng: &mut RngStream,
) -> Result<(EpisodeLog, u64)> {
    start_episode(learner, agent.reset_glow);
    let mut cell: Cell = world.grid_reset(rng);
    let mut log = EpisodeLog::default();
    let mut internal = 0;
    for t in 0..max_len {
        let label = world.cell_index(cell);
        let (action, distribution, spent) =
            act(learner, label, encoding.state(label), encoding.povm(), &agent.gradient, true, rng)?;
        internal += spent;
        let step = world.grid_step(cell, action);
        learn(learner, label, action, if agent.learning { step.reward } else { 0.0 });
        log.records.push(CycleRecord { cycle: t, percept: label, action, reward: step.reward, distribution });
        if step.terminal {
            return Ok((log, internal));
        }
        cell = step.next;
    }
    log.truncated = true;
    Ok((log, internal))
}

fn run_grid_agent(cfg: &CurveConfig, grid: &GridConfig, mut learner: Learner, rng: &mut RngStream) -> Result<AgentTrace> {
    let encoding = GridEncoding::new(grid.p_coh)?;
    let mut windows = Windows::for_metrics(&cfg.metrics, cfg.record_every, cfg.budget);
    let mut ledger = CycleLedger::default();
    let mut lengths = Vec::with_capacity(cfg.budget as usize);
    for _ in 0..cfg.budget {
        let (log, internal) = run_grid_episode(&mut learner, &grid.world, &encoding, &cfg.agent, grid.max_episode_len, rng)?;
        ledger.external += log.len() as u64;
        ledger.internal += internal;
        ledger.episodes += 1;
        ledger.truncated_episodes += log.truncated as u64;
        lengths.push(log.len() as f64);
        windows.step(|m| match cfg.metrics[m] {
            Metric::EpisodeLength => Ok(log.len() as f64),
            Metric::Reward => Ok(log.total_reward()),
            other => memory_metric(other, &learner, None),
        })?;
    }
    Ok(AgentTrace { series: windows.finish(), episode_lengths: lengths, ledger, learner })
}
