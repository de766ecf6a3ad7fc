use crate::error::{check_len, Result};
use crate::mdp::SaTable;
use crate::oracle::{PrimalDualPoint, SaddleProblem};

/// Exact gradient blocks of `L_M` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub q: SaTable,
    pub v: Vec<f64>,
    pub lam: SaTable,
    pub mu: SaTable,
}

/// `grad_Q = lambda - M mu`, `grad_V = eta - sum_a lambda_a + alpha P^T M mu`,
/// `grad_lambda = Q - (1 ⊗ I) V`, `grad_mu = M (alpha P V + R - Q)`.
pub fn analytic_gradients(
    point: &PrimalDualPoint,
    problem: &SaddleProblem<'_>,
    m: &SaTable,
) -> Result<Gradients> {
    let model = problem.model();
    let (ns, na) = (model.n_states(), model.n_actions());
    check_len("V", ns, point.v.len())?;
    for t in [&point.q, &point.lam, &point.mu, m] {
        check_len("state-action table", ns * na, t.as_slice().len())?;
    }
    let alpha = model.discount();

    let mut m_mu = point.mu.clone();
    for (x, w) in m_mu.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *x *= w;
    }

    let mut q = point.lam.clone();
    for (x, y) in q.as_mut_slice().iter_mut().zip(m_mu.as_slice()) {
        *x -= y;
    }

    let back = model.stacked_p_transpose_times(&m_mu);
    let lam_sums = point.lam.action_sums();
    let v = (0..ns)
        .map(|s| problem.eta()[s] - lam_sums[s] + alpha * back[s])
        .collect();

    let mut lam = point.q.clone();
    for a in 0..na {
        for s in 0..ns {
            lam.add(s, a, -point.v[s]);
        }
    }

    let pv = model.stacked_p_times(&point.v);
    let r = model.expected_rewards();
    let mut mu = SaTable::zeros(ns, na);
    for a in 0..na {
        for s in 0..ns {
            let eq = alpha * pv.get(s, a) + r.get(s, a) - point.q.get(s, a);
            mu.set(s, a, m.get(s, a) * eq);
        }
    }
    Ok(Gradients { q, v, lam, mu })
}
