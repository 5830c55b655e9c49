//! Quick invariant suite behind the `verify` subcommand.

use crate::environments::GridWorld;
use crate::error::Result;
use crate::memory::{build_snapshot, case_i_hamiltonians, gradient_fixed_layers, ControlVector, HamiltonianStack};
use crate::navigation::{demo_case_i, demo_case_ii, demo_case_iii, NavigationReport};
use crate::policy::{encode_percept_action, povm_action_subsystem};
use crate::qmath::{is_unitary, RngStream};

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Cycles used by the navigation demos.
pub const CASE_I_CYCLES: u64 = 100_000;
pub const CASE_II_CYCLES: u64 = 20_000;
pub const CASE_III_CYCLES: u64 = 100_000;

/// Gradient routes, normalization and unitarity on random 8-dim instances.
fn memory_checks(seed: u64) -> Result<Vec<Check>> {
    let mut route_err = 0.0f64;
    let mut sum_err = 0.0f64;
    let mut norm_err = 0.0f64;
    let mut unitary = true;
    let povm = povm_action_subsystem(4, 2);
    for i in 0..20 {
        let mut rng = RngStream::new(seed, i);
        let (h1, h2) = case_i_hamiltonians(8, &mut rng);
        let n = 1 + rng.index(12);
        let stack = HamiltonianStack::alternating(h1, h2, n)?;
        let h = ControlVector::from_vec((0..n).map(|_| rng.normal()).collect());
        let rho = encode_percept_action(rng.index(4), 4, 2, rng.uniform())?;
        let snap = build_snapshot(&stack, &h)?;
        unitary &= is_unitary(snap.unitary(), 1e-10);
        let pass = stack.forward(&h, &rho)?;
        let mut total = vec![0.0; n];
        let mut p_total = 0.0;
        for pi in povm.elements() {
            let g = pass.gradient(&stack, pi);
            let dense = gradient_fixed_layers(&snap, &stack, &rho, pi)?;
            for k in 0..n {
                route_err = route_err.max((g[k] - dense[k]).abs());
                total[k] += g[k];
            }
            p_total += pass.probability(pi);
        }
        sum_err = total.iter().fold(sum_err, |m, x| m.max(x.abs()));
        norm_err = norm_err.max((p_total - 1.0).abs());
    }
    Ok(vec![
        Check::new("gradient_routes_agree", route_err < 1e-10, format!("max error {route_err:e}")),
        Check::new("gradients_sum_to_zero", sum_err < 1e-10, format!("max |Σ_a ∇p| {sum_err:e}")),
        Check::new("distribution_normalized", norm_err < 1e-10, format!("max |Σ_a p - 1| {norm_err:e}")),
        Check::new("memory_unitary", unitary, String::new()),
    ])
}

fn grid_checks() -> Result<Vec<Check>> {
    let gw = GridWorld::default();
    let shortest = gw.shortest_path();
    let t = gw.hitting_time()?;
    Ok(vec![
        Check::new("grid_shortest_path", shortest == Some(4), format!("{shortest:?}")),
        Check::new("grid_hitting_time", (t - 160.0 / 3.0).abs() < 1e-9, format!("{t}")),
    ])
}

fn navigation_checks(seed: u64) -> Result<(Vec<Check>, Vec<NavigationReport>)> {
    let i = demo_case_i(seed, CASE_I_CYCLES)?;
    let ii = demo_case_ii(seed, CASE_II_CYCLES)?;
    let iii = demo_case_iii(seed, CASE_III_CYCLES)?;
    let checks = vec![
        Check::new(
            "case_i_stationary",
            i.achieved <= 0.999 || i.residual_gradient < 1e-2,
            format!("p = {}, |∇p| = {:e}", i.achieved, i.residual_gradient),
        ),
        Check::new(
            "case_ii_phase_freedom",
            ii.freedom_residual.unwrap_or(f64::NAN) < 0.1 * ii.distance_sq.unwrap_or(f64::NAN),
            format!("residual {:?}, D {:?}", ii.freedom_residual, ii.distance_sq),
        ),
        Check::new("case_iii_fidelity", iii.achieved >= 0.99, format!("F = {}", iii.achieved)),
    ];
    Ok((checks, vec![i, ii, iii]))
}

/// Runs every check. Navigation reports are returned for CSV output.
pub fn verify_invariants(seed: u64) -> Result<(Vec<Check>, Vec<NavigationReport>)> {
    let mut checks = memory_checks(seed)?;
    checks.extend(grid_checks()?);
    let (nav, reports) = navigation_checks(seed)?;
    checks.extend(nav);
    Ok((checks, reports))
}
