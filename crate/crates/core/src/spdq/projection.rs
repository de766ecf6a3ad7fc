//! Euclidean projections onto the learner's feasible sets.

use crate::error::{check_len, Error, Result};
use crate::mdp::SaTable;

/// Clamp to `[0, cap]`, the projection onto a box.
pub fn project_value_box(x: &[f64], cap: f64) -> Vec<f64> {
    x.iter().map(|&v| clamp(v, cap)).collect()
}

/// Entry-wise clamp of a `mu` table to `[0, cap]`.
pub fn project_mu(mu: &SaTable, cap: f64) -> SaTable {
    let mut out = mu.clone();
    for x in out.as_mut_slice() {
        *x = clamp(*x, cap);
    }
    out
}

#[inline]
pub(crate) fn clamp(x: f64, cap: f64) -> f64 {
    x.max(0.0).min(cap)
}

fn shifted_sum(row: &[f64], tau: f64, cap: f64) -> f64 {
    row.iter().map(|&y| clamp(y + tau, cap)).sum()
}

/// Projects one state's row onto `{x : 0 <= x <= cap, sum x >= eta_s}`.
///
/// If the clamped row already meets the sum constraint it is the answer.
/// Otherwise the constraint is active and the solution is
/// `clamp(row + tau, 0, cap)` for the `tau > 0` that makes the sum exactly
/// `eta_s`. The sum is piecewise linear in `tau` with breakpoints at `-row_i`
/// and `cap - row_i`, so `tau` is found exactly between two sorted
/// breakpoints; bisection is kept as a fallback for rounding trouble.
pub fn project_lambda(row: &[f64], eta_s: f64, cap: f64) -> Result<Vec<f64>> {
    let n = row.len();
    if n == 0 || !(cap > 0.0) || !(eta_s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda projection needs actions, cap > 0 and eta > 0 (cap {cap}, eta {eta_s})"
        )));
    }
    if eta_s > n as f64 * cap {
        return Err(Error::InfeasibleSet(format!(
            "sum constraint {eta_s} exceeds {n} * cap {cap}"
        )));
    }
    if row.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure {
            message: "non-finite lambda entry".into(),
            partial: f64::NAN,
        });
    }
    let clamped: Vec<f64> = row.iter().map(|&y| clamp(y, cap)).collect();
    if clamped.iter().sum::<f64>() >= eta_s {
        return Ok(clamped);
    }

    let mut points: Vec<f64> = row
        .iter()
        .flat_map(|&y| [-y, cap - y])
        .filter(|&t| t > 0.0)
        .collect();
    points.sort_by(f64::total_cmp);

    let mut lo = 0.0;
    let mut lo_sum = shifted_sum(row, 0.0, cap);
    let mut tau = None;
    for &t in &points {
        let t_sum = shifted_sum(row, t, cap);
        if t_sum >= eta_s {
            // linear on [lo, t]
            tau = Some(if t_sum > lo_sum {
                lo + (eta_s - lo_sum) * (t - lo) / (t_sum - lo_sum)
            } else {
                t
            });
            break;
        }
        lo = t;
        lo_sum = t_sum;
    }
    let mut out = match tau {
        Some(t) => row.iter().map(|&y| clamp(y + t, cap)).collect::<Vec<_>>(),
        None => vec![cap; n],
    };

    let tol = 1e-12 * eta_s.max(1.0);
    let sum: f64 = out.iter().sum();
    if sum < eta_s - tol || !sum.is_finite() {
        let (mut a, mut b) = (0.0, cap + row.iter().map(|y| -y).fold(0.0, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if shifted_sum(row, mid, cap) >= eta_s {
                b = mid;
            } else {
                a = mid;
            }
        }
        out = row.iter().map(|&y| clamp(y + b, cap)).collect();
    }
    Ok(out)
}

/// Row-wise [`project_lambda`] over a whole table.
pub fn project_lambda_table(lam: &SaTable, eta: &[f64], cap: f64) -> Result<SaTable> {
    check_len("eta", lam.n_states(), eta.len())?;
    let mut out = lam.clone();
    for (s, &e) in eta.iter().enumerate() {
        let row = project_lambda(&lam.state_row(s), e, cap)?;
        out.set_state_row(s, &row);
    }
    Ok(out)
}
