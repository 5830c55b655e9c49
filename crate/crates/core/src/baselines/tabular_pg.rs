use super::ps::{row_policy, PolicyKind};
use crate::error::{Error, Result};

/// `∂p_ij/∂h_kl` for every `(k, l)` of a row-major `num_states × num_actions`
/// table, where `p_ij = Π(h_ij)/c_i`. Only row `i` is non-zero.
pub fn tabular_pg_trace(
    h: &[f64],
    num_actions: usize,
    kind: PolicyKind,
    i: usize,
    j: usize,
) -> Result<Vec<f64>> {
    if num_actions == 0 || !h.len().is_multiple_of(num_actions) || (i + 1) * num_actions > h.len() || j >= num_actions {
        return Err(Error::invalid("table indices out of range"));
    }
    let row = &h[i * num_actions..(i + 1) * num_actions];
    let c: f64 = row.iter().map(|&x| kind.weight(x)).sum();
    if c == 0.0 || !c.is_finite() {
        return Err(Error::Degenerate(format!("row {i} has normalization {c}")));
    }
    let pi_ij = kind.weight(row[j]);
    let mut e = vec![0.0; h.len()];
    for (l, &h_il) in row.iter().enumerate() {
        let delta = if l == j { c } else { 0.0 };
        e[i * num_actions + l] = kind.derivative(h_il) * (delta - pi_ij) / (c * c);
    }
    Ok(e)
}

/// Probability table `p_ij` for all rows.
pub fn policy_table(h: &[f64], num_actions: usize, kind: PolicyKind) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(h.len());
    for row in h.chunks(num_actions) {
        out.extend(row_policy(row, kind)?);
    }
    Ok(out)
}
