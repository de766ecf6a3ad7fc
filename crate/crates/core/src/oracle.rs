//! Exact solutions of the primal and dual LPs of a known MDP, Lagrangian
//! evaluation and the pseudo duality gap.
//!
//! Primal: `min eta^T V  s.t.  Q <= (1 ⊗ I) V,  alpha P V + R = Q`.
//! Dual: `lambda* = mu*` supported on the optimal actions, with
//! `(I - alpha P_pi*^T) lambda*_pi* = eta`. For the `M`-scaled equality
//! constraint the `mu` multiplier becomes `M^{-1} lambda*`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Matrix};
use crate::mdp::{self, DeterministicPolicy, MdpModel, SaTable, StochasticPolicy};

/// Relative width of an argmax tie in the oracle's greedy step.
const ORACLE_TIE_TOL: f64 = 1e-10;
/// Agreement required between the two duality-gap formulas.
pub const GAP_IDENTITY_TOL: f64 = 1e-8;

/// The saddle-point problem for one MDP: objective weights `eta` and a
/// positive diagonal state-action measure `M` with floor `zeta`.
#[derive(Debug, Clone)]
pub struct SaddleProblem<'a> {
    model: &'a MdpModel,
    eta: Vec<f64>,
    m_diag: SaTable,
    zeta: f64,
}

impl<'a> SaddleProblem<'a> {
    pub fn new(model: &'a MdpModel, eta: Vec<f64>, m_diag: SaTable, zeta: f64) -> Result<Self> {
        check_len("eta", model.n_states(), eta.len())?;
        check_len("measure states", model.n_states(), m_diag.n_states())?;
        check_len("measure actions", model.n_actions(), m_diag.n_actions())?;
        if let Some(e) = eta.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument(format!("eta entry {e} must be positive")));
        }
        if !(zeta > 0.0) {
            return Err(Error::InvalidArgument(format!("zeta {zeta} must be positive")));
        }
        if let Some(m) = m_diag.as_slice().iter().find(|&&m| !(m >= zeta)) {
            return Err(Error::InvalidArgument(format!(
                "measure entry {m} is below the floor zeta={zeta}"
            )));
        }
        Ok(Self {
            model,
            eta,
            m_diag,
            zeta,
        })
    }

    /// `M = I`, `zeta = 1`.
    pub fn unscaled(model: &'a MdpModel, eta: Vec<f64>) -> Result<Self> {
        let m = SaTable::filled(model.n_states(), model.n_actions(), 1.0);
        Self::new(model, eta, m, 1.0)
    }

    pub fn model(&self) -> &'a MdpModel {
        self.model
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn measure(&self) -> &SaTable {
        &self.m_diag
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn eta_l1(&self) -> f64 {
        linalg::norm_1(&self.eta)
    }
}

/// A point `x = (Q, V)`, `y = (lambda, mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub q: SaTable,
    pub v: Vec<f64>,
    pub lam: SaTable,
    pub mu: SaTable,
}

impl PrimalDualPoint {
    fn check(&self, model: &MdpModel) -> Result<()> {
        let (ns, na) = (model.n_states(), model.n_actions());
        check_len("V", ns, self.v.len())?;
        for (what, t) in [("Q", &self.q), ("lambda", &self.lam), ("mu", &self.mu)] {
            check_len(what, ns * na, t.as_slice().len())?;
            check_len(what, ns, t.n_states())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub v_star: Vec<f64>,
    pub q_star: SaTable,
    pub pi_star: DeterministicPolicy,
    pub lambda_star: SaTable,
    /// `M^{-1} lambda*`, the `mu` multiplier of the `M`-scaled problem.
    pub mu_star_scaled: SaTable,
}

impl OracleSolution {
    /// The saddle point of `L_I`: `(Q*, V*, lambda*, lambda*)`.
    pub fn saddle_point(&self) -> PrimalDualPoint {
        PrimalDualPoint {
            q: self.q_star.clone(),
            v: self.v_star.clone(),
            lam: self.lambda_star.clone(),
            mu: self.lambda_star.clone(),
        }
    }

    /// The saddle point of `L_M`: `(Q*, V*, lambda*, M^{-1} lambda*)`.
    pub fn scaled_saddle_point(&self) -> PrimalDualPoint {
        PrimalDualPoint {
            mu: self.mu_star_scaled.clone(),
            ..self.saddle_point()
        }
    }

    pub fn snapshot(&self) -> OracleSnapshot {
        OracleSnapshot {
            v_star: self.v_star.clone(),
            q_star: self.q_star.to_state_rows(),
            pi_star: self.pi_star.actions().to_vec(),
            lambda_star: self.lambda_star.to_state_rows(),
            mu_star_scaled: self.mu_star_scaled.to_state_rows(),
        }
    }
}

/// Text snapshot of an [`OracleSolution`]; tables are indexed `[state][action]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSnapshot {
    pub v_star: Vec<f64>,
    pub q_star: Vec<Vec<f64>>,
    pub pi_star: Vec<usize>,
    pub lambda_star: Vec<Vec<f64>>,
    pub mu_star_scaled: Vec<Vec<f64>>,
}

impl OracleSnapshot {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("snapshot serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("oracle snapshot: {e}")))
    }
}

/// Lowest index among entries within `tol` of the maximum.
pub(crate) fn argmax_lowest(values: &[f64], tol: f64) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .position(|&x| x >= max - tol)
        .unwrap_or(0)
}

fn bellman_backup(model: &MdpModel, v: &[f64]) -> SaTable {
    let mut q = model.stacked_p_times(v);
    let alpha = model.discount();
    for (qi, r) in q.as_mut_slice().iter_mut().zip(model.expected_rewards().as_slice()) {
        *qi = r + alpha * *qi;
    }
    q
}

fn greedy(q: &SaTable, tol: f64) -> DeterministicPolicy {
    DeterministicPolicy::new(
        (0..q.n_states())
            .map(|s| argmax_lowest(&q.state_row(s), tol))
            .collect(),
    )
}

/// Exact `V*`, `Q*`, `pi*`, `lambda*` and `M^{-1} lambda*`.
///
/// Value iteration runs until the sup-norm step is at most
/// `tol (1 - alpha) / (2 alpha)`; the greedy policy is then evaluated
/// exactly and improved until stable, so the returned `V*` is a linear-solve
/// fixed point rather than a value-iteration approximation.
pub fn solve_optimal(problem: &SaddleProblem<'_>, tol: f64) -> Result<OracleSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let model = problem.model();
    let (ns, na) = (model.n_states(), model.n_actions());
    let alpha = model.discount();
    let threshold = if alpha > 0.0 {
        tol * (1.0 - alpha) / (2.0 * alpha)
    } else {
        f64::INFINITY
    };

    let mut v = vec![0.0; ns];
    for _ in 0..10_000_000usize {
        let q = bellman_backup(model, &v);
        let next: Vec<f64> = (0..ns)
            .map(|s| q.state_row(s).into_iter().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let diff = next
            .iter()
            .zip(&v)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if diff <= threshold {
            break;
        }
    }

    let scale = |v: &[f64]| ORACLE_TIE_TOL * linalg::norm_inf(v).max(1.0);
    let mut pi = greedy(&bellman_backup(model, &v), scale(&v));
    for _ in 0..(ns * na + 10) {
        v = mdp::evaluate_policy(model, &pi.to_stochastic(na))?;
        let q = bellman_backup(model, &v);
        let tie = scale(&v);
        let mut changed = false;
        let mut next = pi.actions().to_vec();
        for (s, current) in next.iter_mut().enumerate() {
            let row = q.state_row(s);
            let best = argmax_lowest(&row, tie);
            if row[best] > row[*current] + tie {
                *current = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        pi = DeterministicPolicy::new(next);
    }

    let q_star = bellman_backup(model, &v);
    let pi_star = greedy(&q_star, scale(&v));

    let p_pi = mdp::transition_matrix_under_policy(model, &pi_star.to_stochastic(na))?;
    let mut system = Matrix::identity(ns);
    for i in 0..ns {
        for j in 0..ns {
            system[(i, j)] -= alpha * p_pi[(j, i)];
        }
    }
    let occupancy = linalg::solve(&system, problem.eta())?;
    let mut lambda_star = SaTable::zeros(ns, na);
    let mut mu_star_scaled = SaTable::zeros(ns, na);
    for s in 0..ns {
        let a = pi_star.action(s);
        lambda_star.set(s, a, occupancy[s]);
        mu_star_scaled.set(s, a, occupancy[s] / problem.measure().get(s, a));
    }

    Ok(OracleSolution {
        v_star: v,
        q_star,
        pi_star,
        lambda_star,
        mu_star_scaled,
    })
}

/// `L_I(Q, V, lambda, mu) = eta^T V + mu^T (alpha P V + R - Q) + lambda^T (Q - (1 ⊗ I) V)`.
pub fn lagrangian_i(point: &PrimalDualPoint, problem: &SaddleProblem<'_>) -> Result<f64> {
    let ones = SaTable::filled(problem.model().n_states(), problem.model().n_actions(), 1.0);
    lagrangian_m(point, problem, &ones)
}

/// `L_M(Q, V, lambda, mu) = eta^T V + mu^T M (alpha P V + R - Q) + lambda^T (Q - (1 ⊗ I) V)`
/// with `M = diag(m)`. Rewards enter through their expectations.
pub fn lagrangian_m(point: &PrimalDualPoint, problem: &SaddleProblem<'_>, m: &SaTable) -> Result<f64> {
    let model = problem.model();
    point.check(model)?;
    check_len("measure", point.q.as_slice().len(), m.as_slice().len())?;
    let alpha = model.discount();
    let pv = model.stacked_p_times(&point.v);
    let r = model.expected_rewards();
    let mut total = linalg::dot(problem.eta(), &point.v);
    for a in 0..model.n_actions() {
        for s in 0..model.n_states() {
            let eq = alpha * pv.get(s, a) + r.get(s, a) - point.q.get(s, a);
            let ineq = point.q.get(s, a) - point.v[s];
            total += point.mu.get(s, a) * m.get(s, a) * eq + point.lam.get(s, a) * ineq;
        }
    }
    Ok(total)
}

/// Dual policy: row-normalized `lambda`.
pub fn dual_policy_of(lam: &SaTable) -> Result<StochasticPolicy> {
    StochasticPolicy::from_weights(&lam.to_state_rows())
}

/// Both evaluations of the pseudo duality gap at an averaged point.
#[derive(Debug, Clone)]
pub struct GapReport {
    /// `L_I(x_hat, y*) - L_I(x*, y_hat)`.
    pub direct: f64,
    /// `sum_a lambda_hat_a^T (I - alpha P_pi) (V* - V^pi)` with `pi` the dual policy.
    pub occupancy_form: f64,
    pub dual_policy: StochasticPolicy,
    pub dual_policy_value: Vec<f64>,
}

impl GapReport {
    pub fn value(&self) -> f64 {
        self.direct
    }
}

/// Pseudo duality gap `D(x_hat, y_hat) = L_I(x_hat, y*) - L_I(x*, y_hat)`.
///
/// `y_hat.mu` must be the measure-weighted average `(1/T) sum_k M_k mu_k`.
/// The gap is recomputed through the dual-policy value function and both
/// results must agree within [`GAP_IDENTITY_TOL`]; `lambda_hat` needs
/// positive per-state sums for the dual policy to exist.
pub fn duality_gap(
    hat: &PrimalDualPoint,
    sol: &OracleSolution,
    problem: &SaddleProblem<'_>,
) -> Result<GapReport> {
    let model = problem.model();
    let direct = lagrangian_i(
        &PrimalDualPoint {
            q: hat.q.clone(),
            v: hat.v.clone(),
            lam: sol.lambda_star.clone(),
            mu: sol.lambda_star.clone(),
        },
        problem,
    )? - lagrangian_i(
        &PrimalDualPoint {
            q: sol.q_star.clone(),
            v: sol.v_star.clone(),
            lam: hat.lam.clone(),
            mu: hat.mu.clone(),
        },
        problem,
    )?;

    let policy = dual_policy_of(&hat.lam)?;
    let v_pi = mdp::evaluate_policy(model, &policy)?;
    let p_pi = mdp::transition_matrix_under_policy(model, &policy)?;
    let diff: Vec<f64> = sol.v_star.iter().zip(&v_pi).map(|(a, b)| a - b).collect();
    let p_diff = p_pi.mul_vec(&diff);
    let weights = hat.lam.action_sums();
    let occupancy_form: f64 = (0..model.n_states())
        .map(|s| weights[s] * (diff[s] - model.discount() * p_diff[s]))
        .sum();

    if (direct - occupancy_form).abs() > GAP_IDENTITY_TOL {
        return Err(Error::InternalConsistency(format!(
            "duality gap formulas disagree: direct {direct:e}, occupancy form {occupancy_form:e}"
        )));
    }
    if direct < -GAP_IDENTITY_TOL {
        return Err(Error::InternalConsistency(format!(
            "negative duality gap {direct:e} at a feasible point"
        )));
    }
    Ok(GapReport {
        direct,
        occupancy_form,
        dual_policy: policy,
        dual_policy_value: v_pi,
    })
}

/// Norm bounds on the saddle point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSet {
    /// `sigma / (1 - alpha)`: bounds `||Q*_a||_inf <= ||V*||_inf`.
    pub value_inf: f64,
    /// `sqrt(|S|) sigma / (1 - alpha)`: bounds `||V*||_2`.
    pub value_l2: f64,
    /// `||eta||_1 / (1 - alpha)`: bounds `||lambda*||_1`.
    pub lambda_l1: f64,
    /// `||eta||_1 / (zeta (1 - alpha))`: bounds `||M^{-1} lambda*||_1`.
    pub mu_l1: f64,
}

impl BoundSet {
    pub fn for_problem(problem: &SaddleProblem<'_>) -> Self {
        let model = problem.model();
        let gap = 1.0 - model.discount();
        Self {
            value_inf: model.sigma() / gap,
            value_l2: (model.n_states() as f64).sqrt() * model.sigma() / gap,
            lambda_l1: problem.eta_l1() / gap,
            mu_l1: problem.eta_l1() / (problem.zeta() * gap),
        }
    }
}

/// Returns the bound set and checks that `sol` satisfies all of it, together
/// with `sum_a lambda*_a >= eta`.
pub fn solution_bounds(problem: &SaddleProblem<'_>, sol: &OracleSolution) -> Result<BoundSet> {
    let bounds = BoundSet::for_problem(problem);
    let slack = |b: f64| b * (1.0 + 1e-12) + 1e-12;
    let fail = |what: &str, value: f64, bound: f64| {
        Err(Error::InternalConsistency(format!(
            "{what} = {value} exceeds its bound {bound}"
        )))
    };
    let v_inf = linalg::norm_inf(&sol.v_star);
    if v_inf > slack(bounds.value_inf) {
        return fail("||V*||_inf", v_inf, bounds.value_inf);
    }
    for a in 0..sol.q_star.n_actions() {
        let q_inf = linalg::norm_inf(sol.q_star.block(a));
        if q_inf > slack(v_inf) {
            return fail("||Q*_a||_inf", q_inf, v_inf);
        }
    }
    let v_l2 = linalg::norm_2(&sol.v_star);
    if v_l2 > slack(bounds.value_l2) {
        return fail("||V*||_2", v_l2, bounds.value_l2);
    }
    let lam_l1 = linalg::norm_1(sol.lambda_star.as_slice());
    if lam_l1 > slack(bounds.lambda_l1) {
        return fail("||lambda*||_1", lam_l1, bounds.lambda_l1);
    }
    let mu_l1 = linalg::norm_1(sol.mu_star_scaled.as_slice());
    if mu_l1 > slack(bounds.mu_l1) {
        return fail("||mu*||_1", mu_l1, bounds.mu_l1);
    }
    for (s, (sum, eta)) in sol
        .lambda_star
        .action_sums()
        .iter()
        .zip(problem.eta())
        .enumerate()
    {
        if *sum < eta * (1.0 - 1e-12) {
            return Err(Error::InternalConsistency(format!(
                "sum_a lambda*_a({s}) = {sum} is below eta = {eta}"
            )));
        }
    }
    Ok(bounds)
}

/// Certified bound on `||V* - V^pi_d||_inf` implied by a duality gap:
/// `gap / (min_s eta(s) (1 - alpha))`.
pub fn policy_suboptimality_bound(gap: f64, problem: &SaddleProblem<'_>) -> Result<f64> {
    if gap < -GAP_IDENTITY_TOL || gap.is_nan() {
        return Err(Error::InvalidArgument(format!("gap {gap} must be nonnegative")));
    }
    let eta_min = problem.eta().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(gap.max(0.0) / (eta_min * (1.0 - problem.model().discount())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::two_state_mdp;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_lowest(&[1.0, 1.0, 0.5], 0.0), 0);
        assert_eq!(argmax_lowest(&[0.0, 1.0, 1.0 + 1e-13], 1e-12), 1);
        assert_eq!(argmax_lowest(&[0.0, 1.0, 1.1], 1e-12), 2);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let model = two_state_mdp();
        let problem = SaddleProblem::unscaled(&model, vec![0.1, 0.1]).unwrap();
        assert!(solve_optimal(&problem, 0.0).is_err());
    }

    #[test]
    fn problem_validation() {
        let model = two_state_mdp();
        assert!(SaddleProblem::unscaled(&model, vec![0.1, 0.0]).is_err());
        assert!(SaddleProblem::unscaled(&model, vec![0.1]).is_err());
        let m = SaTable::filled(2, 2, 0.05);
        assert!(SaddleProblem::new(&model, vec![0.1, 0.1], m, 0.1).is_err());
    }

    #[test]
    fn suboptimality_bound_plug_in() {
        let model = two_state_mdp();
        let problem = SaddleProblem::unscaled(&model, vec![1.5, 1.5]).unwrap();
        assert_eq!(policy_suboptimality_bound(0.0, &problem).unwrap(), 0.0);
        let b = policy_suboptimality_bound(0.3, &problem).unwrap();
        assert!((b - 0.3 / 0.15).abs() < 1e-12);
        assert!(policy_suboptimality_bound(-1.0, &problem).is_err());
    }
}
