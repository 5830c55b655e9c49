//! Post-hoc checks that tie a trained memory to a region of the unitary group.
//!
//! Three situations are distinguished by how much of `U` the task pins down:
//!
//! * case (i): one percept, one correct action. Any `U` that sends `ρ(s)`
//!   into the support of `Π_a` is optimal, and at such a point `p(a|s)` has
//!   a vanishing gradient.
//! * case (ii): several percepts from a single orthonormal basis. The task
//!   fixes `U` only up to diagonal phases, `U ∈ {U_T D}`.
//! * case (iii): percepts drawn from random bases. Only a global phase is
//!   left, so the average gate fidelity to `U_T` tends to 1.

use num_complex::Complex64;

use crate::agent::GlowAgent;
use crate::environments::{correct_action, InvasionGame};
use crate::error::{Error, Result};
use crate::memory::{build_snapshot, gradient_fixed_layers, HamiltonianStack, MemorySnapshot};
use crate::metrics::{avg_fidelity, distance_sq};
use crate::policy::distribution_from_pass;
use crate::qmath::{CMatrix, DensityMatrix};
use crate::runner::{preset, run_curve, Learner, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NavigationCase {
    I,
    II,
    III,
}

impl NavigationCase {
    pub fn label(self) -> &'static str {
        match self {
            NavigationCase::I => "i",
            NavigationCase::II => "ii",
            NavigationCase::III => "iii",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigationReport {
    pub case: NavigationCase,
    /// Success probability (cases i, ii) or average gate fidelity (case iii).
    pub achieved: f64,
    /// Max-norm of the gradient of the achieved quantity.
    pub residual_gradient: f64,
    pub cycles: u64,
    /// Distance to the nearest `U_T D` with diagonal unitary `D`.
    pub freedom_residual: Option<f64>,
    pub distance_sq: Option<f64>,
}

impl NavigationReport {
    pub const CSV_HEADER: &'static str = "case,achieved,residual_gradient,cycles,freedom_residual,distance_sq";

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.case.label(),
            self.achieved,
            self.residual_gradient,
            self.cycles,
            opt(self.freedom_residual),
            opt(self.distance_sq)
        )
    }
}

/// Max-norm of `∇p(a|s)` at the snapshot, via the dense fixed-layer route.
pub fn stationary_point_check(
    snap: &MemorySnapshot,
    stack: &HamiltonianStack,
    rho: &DensityMatrix,
    pi: &CMatrix,
) -> Result<f64> {
    let g = gradient_fixed_layers(snap, stack, rho, pi)?;
    Ok(g.iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// Closest member `U_T D` of the diagonal-phase class.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAlignment {
    /// `‖U − U_T D‖_F` at the optimum.
    pub residual: f64,
    /// Diagonal of the optimal `D`.
    pub phases: Vec<Complex64>,
}

/// `min_D ‖U − U_T D‖_F` over diagonal unitaries `D`.
///
/// Conjugating a diagonal `D₂` by `U_T` and composing with a diagonal `D₁`
/// gives `U_T D₂ U_T† · U_T · D₁ = U_T D₂ D₁`, so the class is `{U_T D}`.
/// With `W = U_T† U` the optimum is `D_jj = W_jj / |W_jj|`.
pub fn phase_alignment(u: &CMatrix, u_t: &CMatrix) -> Result<PhaseAlignment> {
    if u.shape() != u_t.shape() || !u.is_square() {
        return Err(Error::invalid("unitaries must be square and of equal size"));
    }
    let w = u_t.adjoint() * u;
    let n = w.nrows();
    let phases: Vec<Complex64> = (0..n)
        .map(|j| {
            let z = w[(j, j)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    let mut sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { phases[j] } else { Complex64::new(0.0, 0.0) };
            sq += (w[(i, j)] - d).norm_sqr();
        }
    }
    Ok(PhaseAlignment { residual: sq.sqrt(), phases })
}

pub fn basis_freedom_check(u: &CMatrix, u_t: &CMatrix) -> Result<f64> {
    Ok(phase_alignment(u, u_t)?.residual)
}

/// `Σ_k p_k p(correct|k)` over the attacks possible at `cycle`, from the
/// agent's action distributions.
pub fn success_probability(agent: &GlowAgent, game: &InvasionGame, cycle: u64) -> Result<f64> {
    let mut total = 0.0;
    for (attack, p) in game.attack_distribution(cycle) {
        let rho = game.encode(attack)?;
        let dist = agent.distribution(&rho, game.povm())?;
        total += p * dist[correct_action(game.config(), cycle, attack)];
    }
    Ok(total)
}

/// Gradient of [`success_probability`] with respect to the controls.
pub fn success_gradient(agent: &GlowAgent, game: &InvasionGame, cycle: u64) -> Result<Vec<f64>> {
    let stack = agent.stack();
    let mut grad = vec![0.0; stack.len()];
    for (attack, p) in game.attack_distribution(cycle) {
        let rho = game.encode(attack)?;
        let pass = stack.forward(agent.controls(), &rho)?;
        let a = correct_action(game.config(), cycle, attack);
        for (g, x) in grad.iter_mut().zip(pass.gradient(stack, game.povm().element(a))) {
            *g += p * x;
        }
    }
    Ok(grad)
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Trains one agent on a preset curve and returns it with its game.
fn train(preset_name: &str, curve: usize, seed: u64, cycles: u64) -> Result<(GlowAgent, InvasionGame, u64)> {
    let mut cfg = preset(preset_name)?;
    cfg.seed = seed;
    cfg.ensemble = 1;
    cfg.budget = cycles;
    cfg.record_every = cycles;
    cfg.metrics = vec![Metric::Reward];
    let curves = cfg.resolve()?;
    let c = curves
        .get(curve)
        .ok_or_else(|| Error::Config(format!("{preset_name} has no curve {curve}")))?;
    let result = run_curve(c)?;
    let env = match &c.environment {
        crate::runner::EnvironmentConfig::Invasion(i) => i.clone(),
        _ => return Err(Error::Config(format!("{preset_name} is not an invasion game"))),
    };
    let game = InvasionGame::new(env, result.target.clone())?;
    let trace = result.agents.into_iter().next().expect("ensemble of one");
    match trace.learner {
        Learner::Glow(agent) => Ok((agent, game, trace.ledger.total())),
        _ => Err(Error::Config(format!("{preset_name} does not train a glow agent"))),
    }
}

/// Case (i): a 16-control two-symbol agent. Reports the worst percept.
pub fn demo_case_i(seed: u64, cycles: u64) -> Result<NavigationReport> {
    let (agent, game, used) = train("fig5a", 5, seed, cycles)?;
    let snap = build_snapshot(agent.stack(), agent.controls())?;
    let (mut achieved, mut grad) = (1.0f64, 0.0f64);
    for (attack, _) in game.attack_distribution(cycles) {
        let rho = game.encode(attack)?;
        let a = correct_action(game.config(), cycles, attack);
        let pass = agent.stack().forward(agent.controls(), &rho)?;
        achieved = achieved.min(distribution_from_pass(&pass, game.povm())?[a]);
        grad = grad.max(stationary_point_check(&snap, agent.stack(), &rho, game.povm().element(a))?);
    }
    Ok(NavigationReport {
        case: NavigationCase::I,
        achieved,
        residual_gradient: grad,
        cycles: used,
        freedom_residual: None,
        distance_sq: None,
    })
}

fn four_percept_report(case: NavigationCase, seed: u64, cycles: u64) -> Result<NavigationReport> {
    let curve = if case == NavigationCase::II { 0 } else { 1 };
    let (agent, game, used) = train("fig8", curve, seed, cycles)?;
    let u = agent.stack().unitary(agent.controls())?;
    let u_t = game.target();
    let achieved = match case {
        NavigationCase::III => avg_fidelity(&u, u_t)?,
        _ => success_probability(&agent, &game, cycles)?,
    };
    Ok(NavigationReport {
        case,
        achieved,
        residual_gradient: max_norm(&success_gradient(&agent, &game, cycles)?),
        cycles: used,
        freedom_residual: Some(basis_freedom_check(&u, u_t)?),
        distance_sq: Some(distance_sq(&u, u_t)?),
    })
}

/// Case (ii): four percepts from one basis, 16 controls.
pub fn demo_case_ii(seed: u64, cycles: u64) -> Result<NavigationReport> {
    four_percept_report(NavigationCase::II, seed, cycles)
}

/// Case (iii): the same game with a fresh random basis every cycle.
pub fn demo_case_iii(seed: u64, cycles: u64) -> Result<NavigationReport> {
    four_percept_report(NavigationCase::III, seed, cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{InvasionConfig, InvasionVariant};
    use crate::memory::{case_i_hamiltonians, ControlVector};
    use crate::metrics::{percept_fidelity, KrausChannel};
    use crate::policy::{encode_invasion_2x2, povm_action_subsystem};
    use crate::qmath::{basis_vector, c, identity, random_unitary, RngStream};
    use std::sync::Arc;

    fn swap4() -> CMatrix {
        let mut s = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            s[(i, j)] = c(1.0, 0.0);
        }
        s
    }

    #[test]
    fn exact_optimum_is_stationary() {
        // SWAP sends |0⟩⊗|0⟩ to |0⟩⊗|0⟩ and |1⟩⊗|0⟩ to |0⟩⊗|1⟩; with a
        // one-layer stack whose generator is SWAP, h = π/2 gives −i·SWAP.
        let h = swap4();
        let stack = HamiltonianStack::from_layers(vec![h.clone()]).unwrap();
        let controls = ControlVector::from_vec(vec![std::f64::consts::FRAC_PI_2]);
        let snap = build_snapshot(&stack, &controls).unwrap();
        let rho = crate::policy::encode_invasion_4(1, 0).unwrap();
        let povm = povm_action_subsystem(2, 2);
        let pass = stack.forward(&controls, &rho).unwrap();
        assert!((pass.probability(povm.element(1)) - 1.0).abs() < 1e-12);
        assert!(stationary_point_check(&snap, &stack, &rho, povm.element(1)).unwrap() < 1e-10);
    }

    #[test]
    fn random_controls_are_not_stationary() {
        let mut hits = 0;
        for seed in 0..20 {
            let mut rng = RngStream::new(seed, 0);
            let (h1, h2) = case_i_hamiltonians(4, &mut rng);
            let stack = HamiltonianStack::alternating(h1, h2, 8).unwrap();
            let h = ControlVector::from_vec((0..8).map(|_| rng.normal()).collect());
            let snap = build_snapshot(&stack, &h).unwrap();
            let rho = encode_invasion_2x2(0, 1.0).unwrap();
            let pi = povm_action_subsystem(2, 2).element(0).clone();
            if stationary_point_check(&snap, &stack, &rho, &pi).unwrap() > 1e-3 {
                hits += 1;
            }
        }
        assert_eq!(hits, 20);
    }

    #[test]
    fn alignment_recovers_diagonal_class() {
        let mut rng = RngStream::new(3, 0);
        let u_t = random_unitary(4, &mut rng);
        assert!(basis_freedom_check(&u_t, &u_t).unwrap() < 1e-12);
        let phases: Vec<Complex64> = (0..4).map(|k| Complex64::from_polar(1.0, 0.7 * k as f64 + 0.1)).collect();
        let d = CMatrix::from_diagonal(&crate::qmath::CVector::from_vec(phases.clone()));
        let al = phase_alignment(&(&u_t * &d), &u_t).unwrap();
        assert!(al.residual < 1e-10);
        for (a, b) in al.phases.iter().zip(&phases) {
            assert!((a - b).norm() < 1e-10);
        }
        let other = random_unitary(4, &mut rng);
        assert!(basis_freedom_check(&other, &u_t).unwrap() > 0.1);
    }

    #[test]
    fn alignment_beats_random_diagonals() {
        // Brute-force oracle: no random diagonal does better than the closed form.
        let mut rng = RngStream::new(11, 0);
        let u_t = random_unitary(3, &mut rng);
        let u = random_unitary(3, &mut rng);
        let best = basis_freedom_check(&u, &u_t).unwrap();
        for _ in 0..2000 {
            let d: Vec<Complex64> = (0..3).map(|_| Complex64::from_polar(1.0, rng.uniform() * 6.3)).collect();
            let dm = CMatrix::from_diagonal(&crate::qmath::CVector::from_vec(d));
            let r = (&u - &u_t * dm).norm();
            assert!(r >= best - 1e-12);
        }
    }

    #[test]
    fn success_probability_matches_percept_fidelity() {
        // Two routes to the same number: action distributions and the
        // percept-statistics fidelity of the memory channel.
        let mut rng = RngStream::new(5, 0);
        let (h1, h2) = crate::memory::case_ii_hamiltonians(2, 2, &mut rng);
        let stack = Arc::new(HamiltonianStack::alternating(h1, h2, 6).unwrap());
        let h = ControlVector::from_vec((0..6).map(|_| rng.normal()).collect());
        let agent = GlowAgent::new(stack.clone(), crate::agent::GlowParams::new(0.0, 1.0))
            .unwrap()
            .with_controls(h.clone())
            .unwrap();
        let cfg = InvasionConfig::new(InvasionVariant::FourPercept4Act, 1.0, -10.0);
        let game = InvasionGame::with_random_target(cfg, &mut rng).unwrap();
        let u = stack.unitary(&h).unwrap();
        let ch = KrausChannel::unitary(u).unwrap();
        let inputs: Vec<_> = (0..4).map(|k| (basis_vector(4, k), 0.25)).collect();
        let f2 = percept_fidelity(&ch, game.target(), &inputs).unwrap();
        let p = success_probability(&agent, &game, 0).unwrap();
        assert!((f2 - p).abs() < 1e-12, "{f2} vs {p}");

        let at_target = GlowAgent::new(stack, crate::agent::GlowParams::new(0.0, 1.0)).unwrap();
        let id_game = InvasionGame::new(game.config().clone(), Some(identity(4))).unwrap();
        assert!((success_probability(&at_target, &id_game, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn success_gradient_matches_finite_differences() {
        let mut rng = RngStream::new(9, 0);
        let (h1, h2) = crate::memory::case_ii_hamiltonians(2, 2, &mut rng);
        let stack = Arc::new(HamiltonianStack::alternating(h1, h2, 5).unwrap());
        let h: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let cfg = InvasionConfig::new(InvasionVariant::FourPercept4Act, 1.0, -10.0);
        let game = InvasionGame::with_random_target(cfg, &mut rng).unwrap();
        let make = |x: &[f64]| {
            GlowAgent::new(stack.clone(), crate::agent::GlowParams::new(0.0, 1.0))
                .unwrap()
                .with_controls(ControlVector::from_vec(x.to_vec()))
                .unwrap()
        };
        let g = success_gradient(&make(&h), &game, 0).unwrap();
        let eps = 1e-5;
        for k in 0..5 {
            let (mut hp, mut hm) = (h.clone(), h.clone());
            hp[k] += eps;
            hm[k] -= eps;
            let fd = (success_probability(&make(&hp), &game, 0).unwrap()
                - success_probability(&make(&hm), &game, 0).unwrap())
                / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn report_row_layout() {
        let r = NavigationReport {
            case: NavigationCase::II,
            achieved: 0.5,
            residual_gradient: 0.25,
            cycles: 10,
            freedom_residual: Some(0.125),
            distance_sq: None,
        };
        assert_eq!(NavigationReport::CSV_HEADER.split(',').count(), r.csv_row().split(',').count());
        assert_eq!(r.csv_row(), "ii,0.5,0.25,10,0.125,");
    }
}
