//! Time-varying state-action measures `M_k` seen by an off-policy learner.
//!
//! A behavior policy `theta` with initial state distribution `v_0` induces
//! the chain `v_{k+1} = P_theta^T v_k` and the measure
//! `tau_{a,k}(s) = v_k(s) theta_s(a)`. The schedule may start observing
//! `start_step` transitions into the chain, in which case `M_k` is built from
//! `v_{k + start_step}`.

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Matrix};
use crate::mdp::{self, MdpModel, SaTable, StochasticPolicy};

/// Any deterministic sequence of diagonal state-action measures.
pub trait MeasureSchedule {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Diagonal of `M_k`, action-major.
    fn measure_at(&mut self, k: usize) -> SaTable;
    /// Uniform floor on every entry of every `M_k`.
    fn zeta(&self) -> f64;
}

/// Measure sequence induced by a fixed behavior policy.
#[derive(Debug, Clone)]
pub struct DistributionSchedule {
    behavior: StochasticPolicy,
    v0: Vec<f64>,
    start_step: usize,
    p_beta: Matrix,
    v_infinity: Vec<f64>,
    m_infinity: SaTable,
    zeta: f64,
    // memoized chain position: v_k and v_{k+1} - v_k at raw index `cursor`
    cursor: usize,
    v_cursor: Vec<f64>,
    d_cursor: Vec<f64>,
}

impl DistributionSchedule {
    /// Builds the schedule. When `zeta` is `None` it is estimated over the
    /// default mixing horizon; an explicit value must not exceed that estimate.
    pub fn new(
        model: &MdpModel,
        behavior: StochasticPolicy,
        v0: Vec<f64>,
        start_step: usize,
        zeta: Option<f64>,
    ) -> Result<Self> {
        behavior.check_dims(model.n_states(), model.n_actions())?;
        check_len("v0", model.n_states(), v0.len())?;
        if behavior.min_prob() <= 0.0 {
            return Err(Error::InvalidSchedule(
                "behavior policy must give every action positive probability".into(),
            ));
        }
        let sum: f64 = v0.iter().sum();
        if v0.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSchedule("v0 is not a probability vector".into()));
        }
        let p_beta = mdp::transition_matrix_under_policy(model, &behavior)?;
        let v_infinity = stationary_distribution(&p_beta)?;
        if v_infinity.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidSchedule(
                "stationary distribution has a zero entry".into(),
            ));
        }
        let m_infinity = product_measure(&v_infinity, &behavior);
        let d0 = deflate(diff_step(&p_beta, &v0), &v_infinity);
        let mut sched = Self {
            behavior,
            v0: v0.clone(),
            start_step,
            p_beta,
            v_infinity,
            m_infinity,
            zeta: f64::NAN,
            cursor: 0,
            v_cursor: v0,
            d_cursor: d0,
        };
        let horizon = sched.default_horizon()?;
        let estimate = sched.estimate_zeta(horizon)?;
        sched.zeta = match zeta {
            None => estimate,
            Some(z) if z > 0.0 && z <= estimate * (1.0 + 1e-12) => z,
            Some(z) => {
                return Err(Error::InvalidSchedule(format!(
                    "zeta {z} exceeds the smallest measure entry {estimate}"
                )))
            }
        };
        Ok(sched)
    }

    pub fn behavior(&self) -> &StochasticPolicy {
        &self.behavior
    }

    pub fn v0(&self) -> &[f64] {
        &self.v0
    }

    pub fn start_step(&self) -> usize {
        self.start_step
    }

    /// `P_theta`.
    pub fn behavior_transitions(&self) -> &Matrix {
        &self.p_beta
    }

    pub fn stationary(&self) -> &[f64] {
        &self.v_infinity
    }

    /// Diagonal of `M_infinity`.
    pub fn m_infinity(&self) -> &SaTable {
        &self.m_infinity
    }

    fn seek(&mut self, raw: usize) {
        if raw < self.cursor {
            self.cursor = 0;
            self.v_cursor = self.v0.clone();
            self.d_cursor = deflate(diff_step(&self.p_beta, &self.v0), &self.v_infinity);
        }
        while self.cursor < raw {
            self.v_cursor = self.p_beta.tr_mul_vec(&self.v_cursor);
            // propagating the increment directly keeps its relative accuracy
            // after v_k itself has converged to machine precision
            self.d_cursor = deflate(self.p_beta.tr_mul_vec(&self.d_cursor), &self.v_infinity);
            self.cursor += 1;
        }
    }

    /// `v_k = (P_theta^T)^k v_0` (raw chain index, independent of `start_step`).
    pub fn state_distribution_at(&mut self, k: usize) -> Vec<f64> {
        self.seek(k);
        self.v_cursor.clone()
    }

    /// `tau_{a,k}(s) = v_{k + start}(s) theta_s(a)`.
    pub fn m_matrix_at(&mut self, k: usize) -> SaTable {
        self.seek(k + self.start_step);
        product_measure(&self.v_cursor, &self.behavior)
    }

    /// Minimum measure entry over steps `0..=horizon` and the stationary limit.
    pub fn estimate_zeta(&mut self, horizon: usize) -> Result<f64> {
        let mut zeta = min_entry(&self.m_infinity);
        for k in 0..=horizon {
            zeta = zeta.min(min_entry(&self.m_matrix_at(k)));
        }
        if !(zeta > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "measure floor {zeta} is not positive"
            )));
        }
        Ok(zeta)
    }

    /// Drift bound `beta_k = zeta^{-2} max_s |v_{k+1}(s) - v_k(s)|` (schedule index).
    pub fn beta_at(&mut self, k: usize) -> f64 {
        self.seek(k + self.start_step);
        linalg::norm_inf(&self.d_cursor) / (self.zeta * self.zeta)
    }

    /// `||M_k^{-1} - M_{k+1}^{-1}||_2`, the largest diagonal difference.
    pub fn inverse_measure_drift(&mut self, k: usize) -> f64 {
        let a = self.m_matrix_at(k);
        let b = self.m_matrix_at(k + 1);
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .fold(0.0f64, |m, (x, y)| m.max((1.0 / x - 1.0 / y).abs()))
    }

    /// `beta_at` that also confirms it bounds the actual inverse-measure drift.
    pub fn beta_at_checked(&mut self, k: usize) -> Result<f64> {
        let beta = self.beta_at(k);
        let drift = self.inverse_measure_drift(k);
        // both sides carry rounding of order eps / zeta
        let slack = 1e-9 / self.zeta;
        if drift > beta + slack {
            return Err(Error::InternalConsistency(format!(
                "inverse-measure drift {drift:e} exceeds beta_{k} = {beta:e}"
            )));
        }
        Ok(beta)
    }

    /// `|lambda_2|` of the behavior chain.
    pub fn second_eigenvalue(&self) -> Result<f64> {
        second_eigenvalue_modulus(&self.p_beta)
    }

    /// `max(10 k*, 1000)`.
    pub fn default_horizon(&self) -> Result<usize> {
        let l2 = self.second_eigenvalue()?;
        let kstar = if l2 > 0.0 && l2 < 1.0 {
            mixing_threshold_kstar(l2)?
        } else {
            0
        };
        Ok((10 * kstar as usize).max(1000))
    }

    /// Fits `beta_k <= c |lambda_2|^k` over `k <= horizon`, derives
    /// `beta_0 = c |lambda_2|^{-k*}` and checks `beta_k <= beta_0 / (k + 1)`.
    pub fn verify_mixing_bounds(&mut self, horizon: usize) -> Result<MixingReport> {
        let l2 = self.second_eigenvalue()?;
        if l2 >= 1.0 - 1e-12 {
            return Err(Error::InvalidSchedule(format!(
                "behavior chain is not ergodic (|lambda_2| = {l2})"
            )));
        }
        let betas: Vec<f64> = (0..=horizon).map(|k| self.beta_at(k)).collect();
        // entries this small have lost their relative precision
        let floor = 1e-290;
        let ln_l2 = if l2 > 0.0 { l2.ln() } else { f64::NEG_INFINITY };

        let mut c: f64 = 0.0;
        for (k, &b) in betas.iter().enumerate() {
            if b <= floor {
                continue;
            }
            if k > 0 && l2 == 0.0 {
                return Err(Error::InvalidSchedule(format!(
                    "beta_{k} = {b:e} is positive while |lambda_2| = 0"
                )));
            }
            let log_ratio = if k == 0 { b.ln() } else { b.ln() - k as f64 * ln_l2 };
            c = c.max(log_ratio.exp());
        }
        if !c.is_finite() {
            return Err(Error::InvalidSchedule("drift constant c overflowed".into()));
        }
        let kstar = if l2 > 0.0 { mixing_threshold_kstar(l2)? } else { 0 };
        let d = if l2 > 0.0 { (-(kstar as f64) * ln_l2).exp() } else { 1.0 };
        let beta0 = c * d;

        let rel = 1.0 + 1e-9;
        let mut exponential_ok = true;
        let mut harmonic_ok = true;
        for (k, &b) in betas.iter().enumerate() {
            if b <= floor {
                continue;
            }
            let exp_bound = if k == 0 {
                c
            } else {
                (c.ln() + k as f64 * ln_l2).exp()
            };
            exponential_ok &= b <= exp_bound * rel;
            harmonic_ok &= b <= beta0 / (k as f64 + 1.0) * rel;
        }
        Ok(MixingReport {
            lambda2: l2,
            kstar,
            c,
            d,
            beta0,
            horizon,
            exponential_ok,
            harmonic_ok,
        })
    }
}

impl MeasureSchedule for DistributionSchedule {
    fn n_states(&self) -> usize {
        self.v0.len()
    }

    fn n_actions(&self) -> usize {
        self.behavior.n_actions()
    }

    fn measure_at(&mut self, k: usize) -> SaTable {
        self.m_matrix_at(k)
    }

    fn zeta(&self) -> f64 {
        self.zeta
    }
}

/// Removes the stationary component from a difference of distributions.
/// Exact arithmetic keeps it at zero; rounding would otherwise leave a
/// floor near machine epsilon that never decays.
fn deflate(mut d: Vec<f64>, v_infinity: &[f64]) -> Vec<f64> {
    let total: f64 = d.iter().sum();
    for (x, v) in d.iter_mut().zip(v_infinity) {
        *x -= total * v;
    }
    d
}

/// A user-supplied measure sequence; the last table repeats forever. Only the
/// positivity floor is checked.
#[derive(Debug, Clone)]
pub struct ExplicitSchedule {
    tables: Vec<SaTable>,
    zeta: f64,
}

impl ExplicitSchedule {
    pub fn new(tables: Vec<SaTable>) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidSchedule("no measure tables".into()))?;
        let mut zeta = f64::INFINITY;
        for t in &tables {
            if !t.same_shape(first) {
                return Err(Error::InvalidSchedule("measure tables differ in shape".into()));
            }
            let total: f64 = t.as_slice().iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidSchedule(format!(
                    "measure table sums to {total}, not 1"
                )));
            }
            zeta = zeta.min(min_entry(t));
        }
        if !(zeta > 0.0) {
            return Err(Error::InvalidSchedule("measure has a nonpositive entry".into()));
        }
        Ok(Self { tables, zeta })
    }
}

impl MeasureSchedule for ExplicitSchedule {
    fn n_states(&self) -> usize {
        self.tables[0].n_states()
    }

    fn n_actions(&self) -> usize {
        self.tables[0].n_actions()
    }

    fn measure_at(&mut self, k: usize) -> SaTable {
        self.tables[k.min(self.tables.len() - 1)].clone()
    }

    fn zeta(&self) -> f64 {
        self.zeta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingReport {
    pub lambda2: f64,
    pub kstar: u64,
    pub c: f64,
    pub d: f64,
    pub beta0: f64,
    pub horizon: usize,
    /// `beta_k <= c |lambda_2|^k` for every `k <= horizon`.
    pub exponential_ok: bool,
    /// `beta_k <= beta_0 / (k + 1)` for every `k <= horizon`.
    pub harmonic_ok: bool,
}

fn product_measure(v: &[f64], theta: &StochasticPolicy) -> SaTable {
    let mut m = SaTable::zeros(v.len(), theta.n_actions());
    for (s, vs) in v.iter().enumerate() {
        for a in 0..theta.n_actions() {
            m.set(s, a, vs * theta.prob(s, a));
        }
    }
    m
}

fn min_entry(t: &SaTable) -> f64 {
    t.as_slice().iter().copied().fold(f64::INFINITY, f64::min)
}

fn diff_step(p: &Matrix, v: &[f64]) -> Vec<f64> {
    p.tr_mul_vec(v).iter().zip(v).map(|(a, b)| a - b).collect()
}

/// Behavior policy `[[0.2, 0.8], [0.7, 0.3]]` from `v_0 = [0.4, 0.6]` on the
/// two-state instance, observed from the chain's second step onward.
pub fn two_state_schedule(model: &MdpModel) -> Result<DistributionSchedule> {
    let theta = StochasticPolicy::from_rows(&[vec![0.2, 0.8], vec![0.7, 0.3]])?;
    DistributionSchedule::new(model, theta, vec![0.4, 0.6], 1, None)
}

/// Stationary distribution of a row-stochastic matrix: solves
/// `(P^T - I) v = 0` with one equation replaced by `sum v = 1`.
pub fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut a = p.transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    linalg::solve(&a, &rhs).map_err(|_| {
        Error::InvalidSchedule("behavior chain has no unique stationary distribution".into())
    })
}

/// Modulus of the second-largest eigenvalue of a row-stochastic matrix.
///
/// Deflates the unit eigenvalue, `B = P^T - v_inf 1^T`, and runs the power
/// method on `B` by repeated squaring, tracking `ln ||B^(2^j)||`. The
/// estimate `||B^(2^j)||^(2^-j)` converges to the spectral radius of `B`
/// for real and complex dominant pairs alike.
pub fn second_eigenvalue_modulus(p_theta: &Matrix) -> Result<f64> {
    let n = p_theta.rows();
    if n == 1 {
        return Ok(0.0);
    }
    let v = stationary_distribution(p_theta)?;
    let mut b = p_theta.transpose();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] -= v[i];
        }
    }
    let frob = |m: &Matrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..m.rows() {
            for x in m.row(i) {
                acc += x * x;
            }
        }
        acc.sqrt()
    };

    let mut norm = frob(&b);
    if norm == 0.0 {
        return Ok(0.0);
    }
    b.scale(1.0 / norm);
    let mut log_norm = norm.ln();
    let mut power = 1.0f64;
    let mut estimate = norm;
    for j in 1..=80 {
        let sq = b.mul(&b);
        norm = frob(&sq);
        if norm == 0.0 {
            return Ok(0.0);
        }
        b = sq;
        b.scale(1.0 / norm);
        log_norm = 2.0 * log_norm + norm.ln();
        power *= 2.0;
        let next = (log_norm / power).exp();
        if j >= 6 && (next - estimate).abs() <= 1e-13 {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::NumericalFailure {
        message: "second eigenvalue did not converge".into(),
        partial: estimate,
    })
}

/// Smallest `k*` from `max(0, ceil((2 ln l + 2) / (ln l)^2))`, after which
/// `l^k <= 1 / (k + 1)`.
pub fn mixing_threshold_kstar(lambda2: f64) -> Result<u64> {
    if !(lambda2 > 0.0 && lambda2 < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "|lambda_2| = {lambda2} must lie in (0, 1)"
        )));
    }
    let l = lambda2.ln();
    let raw = ((2.0 * l + 2.0) / (l * l)).ceil();
    Ok(if raw > 0.0 { raw as u64 } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::two_state_mdp;

    fn theta() -> StochasticPolicy {
        StochasticPolicy::from_rows(&[vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap()
    }

    #[test]
    fn first_step_matches_hand_computation() {
        let model = two_state_mdp();
        let mut s = DistributionSchedule::new(&model, theta(), vec![0.4, 0.6], 0, None).unwrap();
        assert_eq!(s.state_distribution_at(0), vec![0.4, 0.6]);
        let v1 = s.state_distribution_at(1);
        assert!((v1[0] - 0.428).abs() < 1e-12 && (v1[1] - 0.572).abs() < 1e-12);
        // with observation from k = 0 the floor is 0.4 * 0.2
        assert!((s.zeta() - 0.08).abs() < 1e-12);
        let beta0 = s.beta_at(0);
        assert!((beta0 - 0.028 / (0.08 * 0.08)).abs() < 1e-9);
    }

    #[test]
    fn shifted_start_gives_reported_floor() {
        let model = two_state_mdp();
        let s = DistributionSchedule::new(&model, theta(), vec![0.4, 0.6], 1, None).unwrap();
        assert!((s.zeta() - 0.0856).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let model = two_state_mdp();
        let det = StochasticPolicy::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(DistributionSchedule::new(&model, det, vec![0.5, 0.5], 0, None).is_err());
        assert!(DistributionSchedule::new(&model, theta(), vec![0.5, 0.6], 0, None).is_err());
        assert!(DistributionSchedule::new(&model, theta(), vec![0.4, 0.6], 0, Some(0.5)).is_err());
    }

    #[test]
    fn kstar_examples() {
        assert_eq!(mixing_threshold_kstar((-1.0f64).exp()).unwrap(), 0);
        assert_eq!(mixing_threshold_kstar(0.02).unwrap(), 0);
        assert_eq!(mixing_threshold_kstar(0.9).unwrap(), 162);
        assert!(mixing_threshold_kstar(0.0).is_err());
        assert!(mixing_threshold_kstar(1.0).is_err());
    }

    #[test]
    fn rank_one_chain_has_zero_second_eigenvalue() {
        let p = Matrix::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(second_eigenvalue_modulus(&p).unwrap() < 1e-12);
    }

    #[test]
    fn two_state_second_eigenvalue_is_trace_minus_one() {
        let p = Matrix::from_rows(&[vec![0.44, 0.56], vec![0.42, 0.58]]).unwrap();
        assert!((second_eigenvalue_modulus(&p).unwrap() - 0.02).abs() < 1e-8);
    }

    #[test]
    fn explicit_schedule_repeats_last_table() {
        let a = SaTable::filled(2, 2, 0.25);
        let b = SaTable::from_stacked(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut s = ExplicitSchedule::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(s.measure_at(0), a);
        assert_eq!(s.measure_at(7), b);
        assert!((s.zeta() - 0.1).abs() < 1e-15);
        assert!(ExplicitSchedule::new(vec![SaTable::zeros(2, 2)]).is_err());
    }
}
