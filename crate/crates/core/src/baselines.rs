//! Comparison learners.
//!
//! * Tabular Q-learning on the behavior trajectory.
//! * A projected stochastic primal-dual method on the value-function LP
//!   `min eta^T V  s.t.  alpha P_a V + R_a <= V`, driven by behavior samples.
//!   Its raw multipliers converge to `M^{-1} lambda*`, so the output is
//!   rescaled by the empirical state-action frequencies.
//! * The deterministic full-gradient projected iteration on the
//!   `M_k`-weighted Lagrangian, which the stochastic learner follows in
//!   expectation.

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::mdp::{SaTable, StochasticPolicy};
use crate::oracle::{PrimalDualPoint, SaddleProblem};
use crate::spdq::{
    analytic_gradients, project_lambda_table, projection, FeasibleSets, RunConfig,
    TransitionSource, UniformSample,
};

#[derive(Debug, Clone, PartialEq)]
pub struct QLearningState {
    pub q: SaTable,
    pub visit_counts: SaTable,
}

impl QLearningState {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            q: SaTable::zeros(n_states, n_actions),
            visit_counts: SaTable::zeros(n_states, n_actions),
        }
    }

    /// `Q(s,a) <- (1 - g) Q(s,a) + g (r + alpha max_b Q(s', b))`, clamped to `[0, cap]`.
    pub fn update(&mut self, t: &crate::spdq::Transition, gamma: f64, alpha: f64, cap: f64) {
        let best = self
            .q
            .state_row(t.next_state)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let old = self.q.get(t.state, t.action);
        let target = t.reward + alpha * best;
        self.q
            .set(t.state, t.action, projection::clamp((1.0 - gamma) * old + gamma * target, cap));
        self.visit_counts.add(t.state, t.action, 1.0);
    }
}

/// Q-learning from zero, observer called after each checkpoint step count.
pub fn q_learning_run<S: TransitionSource + ?Sized>(
    source: &mut S,
    sets: &FeasibleSets,
    config: &RunConfig,
    observer: &mut dyn FnMut(usize, &QLearningState) -> Result<()>,
) -> Result<QLearningState> {
    config.validate()?;
    let mut state = QLearningState::new(sets.n_states(), sets.n_actions());
    let mut cps = config.checkpoints.iter().peekable();
    for k in 0..config.iterations {
        let t = source.next_transition(k)?;
        if t.state >= sets.n_states() || t.next_state >= sets.n_states() || t.action >= sets.n_actions() {
            return Err(Error::Contract(format!("transition {t:?} out of range")));
        }
        state.update(&t, config.steps.at(k), sets.discount(), sets.value_cap());
        while cps.peek().is_some_and(|&&c| c < k + 1) {
            cps.next();
        }
        if cps.peek() == Some(&&(k + 1)) {
            cps.next();
            observer(k + 1, &state)?;
        }
    }
    Ok(state)
}

/// Visit counts of the observed pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    n_states: usize,
    n_actions: usize,
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalMeasure {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            counts: vec![0; n_states * n_actions],
            total: 0,
        }
    }

    pub fn observe(&mut self, s: usize, a: usize) {
        self.counts[a * self.n_states + s] += 1;
        self.total += 1;
    }

    pub fn count(&self, s: usize, a: usize) -> u64 {
        self.counts[a * self.n_states + s]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `counts / total`.
    pub fn frequencies(&self) -> SaTable {
        let t = self.total.max(1) as f64;
        let data = self.counts.iter().map(|&c| c as f64 / t).collect();
        SaTable::from_stacked(self.n_states, self.n_actions, data).expect("shape")
    }

    /// Frequencies with unseen pairs floored at `1 / total`.
    pub fn floored_frequencies(&self) -> SaTable {
        let t = self.total.max(1) as f64;
        let data = self.counts.iter().map(|&c| c.max(1) as f64 / t).collect();
        SaTable::from_stacked(self.n_states, self.n_actions, data).expect("shape")
    }
}

/// How the raw primal-dual multipliers are rescaled.
#[derive(Debug, Clone, PartialEq)]
pub enum Correction {
    /// By the empirical visit frequencies.
    Empirical,
    /// By a known measure.
    Exact(SaTable),
}

/// Iterate of the value-function primal-dual learner.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdRlState {
    pub v: Vec<f64>,
    pub lam: SaTable,
    pub k: usize,
}

/// Averages of the value-function learner and its corrected multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdRlAverages {
    v_sum: Vec<f64>,
    lam_sum: SaTable,
    count: usize,
    measure: EmpiricalMeasure,
}

impl SpdRlAverages {
    pub fn v_bar(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.v_sum.iter().map(|x| x / n).collect()
    }

    pub fn raw_lam_bar(&self) -> SaTable {
        let mut t = self.lam_sum.clone();
        let n = self.count as f64;
        for x in t.as_mut_slice() {
            *x /= n;
        }
        t
    }

    pub fn measure(&self) -> &EmpiricalMeasure {
        &self.measure
    }

    /// `M lambda_bar` with `M` from the chosen correction.
    pub fn corrected_lambda(&self, correction: &Correction) -> SaTable {
        let m = match correction {
            Correction::Empirical => self.measure.floored_frequencies(),
            Correction::Exact(m) => m.clone(),
        };
        let mut out = self.raw_lam_bar();
        for (x, w) in out.as_mut_slice().iter_mut().zip(m.as_slice()) {
            *x *= w;
        }
        out
    }

    /// Row-normalized corrected multipliers. Nothing keeps a row of these
    /// multipliers away from zero, so an all-zero row maps to the uniform
    /// distribution.
    pub fn dual_policy(&self, correction: &Correction) -> StochasticPolicy {
        let lam = self.corrected_lambda(correction);
        let na = lam.n_actions();
        let rows: Vec<Vec<f64>> = (0..lam.n_states())
            .map(|s| {
                let row = lam.state_row(s);
                if row.iter().sum::<f64>() > 0.0 {
                    row
                } else {
                    vec![1.0; na]
                }
            })
            .collect();
        StochasticPolicy::from_weights(&rows).expect("rows have positive mass")
    }
}

/// Projected stochastic primal-dual on `L(V, lambda) = eta^T V +
/// sum_a lambda_a^T (alpha P_a V + R_a - V)` with behavior samples.
///
/// Per step, with `(s, a, s', r)` observed and `s_hat` uniform:
/// `V -= g (|S| eta(s_hat) e_{s_hat} - lambda(s,a) e_s + alpha lambda(s,a) e_{s'})`,
/// `lambda(s,a) += g (r + alpha V(s') - V(s))`, then `V` is clamped to
/// `[0, sigma/(1-alpha)]` and `lambda` to `[0, ||eta||_1/(zeta(1-alpha))]`.
pub fn spd_rl_corrected_run<S, R>(
    source: &mut S,
    sets: &FeasibleSets,
    config: &RunConfig,
    rng: &mut R,
    observer: &mut dyn FnMut(usize, &SpdRlAverages) -> Result<()>,
) -> Result<(SpdRlState, SpdRlAverages)>
where
    S: TransitionSource + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    let (ns, na) = (sets.n_states(), sets.n_actions());
    let alpha = sets.discount();
    let v_cap = sets.value_cap();
    let lam_cap = sets.mu_cap();
    let mut x = SpdRlState {
        v: (0..ns).map(|_| rng.gen::<f64>() * v_cap).collect(),
        lam: SaTable::from_stacked(ns, na, (0..ns * na).map(|_| rng.gen::<f64>() * lam_cap).collect())?,
        k: 0,
    };
    let mut avg = SpdRlAverages {
        v_sum: vec![0.0; ns],
        lam_sum: SaTable::zeros(ns, na),
        count: 0,
        measure: EmpiricalMeasure::new(ns, na),
    };
    let mut cps = config.checkpoints.iter().peekable();
    for k in 0..config.iterations {
        for (a, b) in avg.v_sum.iter_mut().zip(&x.v) {
            *a += b;
        }
        for (a, b) in avg.lam_sum.as_mut_slice().iter_mut().zip(x.lam.as_slice()) {
            *a += b;
        }
        avg.count += 1;

        let t = source.next_transition(k)?;
        if t.state >= ns || t.next_state >= ns || t.action >= na {
            return Err(Error::Contract(format!("transition {t:?} out of range")));
        }
        avg.measure.observe(t.state, t.action);
        let uni = UniformSample::draw(ns, na, rng);
        let gamma = config.steps.at(k);
        let lam = x.lam.get(t.state, t.action);
        let td = t.reward + alpha * x.v[t.next_state] - x.v[t.state];

        x.v[uni.state] -= gamma * ns as f64 * sets.eta()[uni.state];
        x.v[t.state] += gamma * lam;
        x.v[t.next_state] -= gamma * alpha * lam;
        for s in [uni.state, t.state, t.next_state] {
            x.v[s] = projection::clamp(x.v[s], v_cap);
        }
        x.lam
            .set(t.state, t.action, projection::clamp(lam + gamma * td, lam_cap));
        x.k += 1;

        while cps.peek().is_some_and(|&&c| c < k + 1) {
            cps.next();
        }
        if cps.peek() == Some(&&(k + 1)) {
            cps.next();
            observer(k + 1, &avg)?;
        }
    }
    Ok((x, avg))
}

/// One full-gradient projected step on `L_M` with `M = m_k`:
/// primal blocks descend, dual blocks ascend, all from the same point.
pub fn deterministic_pd_step(
    point: &PrimalDualPoint,
    problem: &SaddleProblem<'_>,
    m_k: &SaTable,
    gamma: f64,
    sets: &FeasibleSets,
) -> Result<PrimalDualPoint> {
    check_len("eta", sets.n_states(), problem.eta().len())?;
    let g = analytic_gradients(point, problem, m_k)?;
    let step = |x: &SaTable, d: &SaTable, sign: f64, cap: f64| -> SaTable {
        let mut out = x.clone();
        for (o, d) in out.as_mut_slice().iter_mut().zip(d.as_slice()) {
            *o = projection::clamp(*o + sign * gamma * d, cap);
        }
        out
    };
    let q = step(&point.q, &g.q, -1.0, sets.value_cap());
    let v = point
        .v
        .iter()
        .zip(&g.v)
        .map(|(x, d)| projection::clamp(x - gamma * d, sets.value_cap()))
        .collect();
    let mut lam = point.lam.clone();
    for (o, d) in lam.as_mut_slice().iter_mut().zip(g.lam.as_slice()) {
        *o += gamma * d;
    }
    let lam = project_lambda_table(&lam, sets.eta(), sets.lambda_cap())?;
    let mu = step(&point.mu, &g.mu, 1.0, sets.mu_cap());
    Ok(PrimalDualPoint { q, v, lam, mu })
}

/// Averages of deterministic iterates, with `mu` weighted by `M_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicAverages {
    sum: PrimalDualPoint,
    count: usize,
}

impl DeterministicAverages {
    fn new(ns: usize, na: usize) -> Self {
        Self {
            sum: PrimalDualPoint {
                q: SaTable::zeros(ns, na),
                v: vec![0.0; ns],
                lam: SaTable::zeros(ns, na),
                mu: SaTable::zeros(ns, na),
            },
            count: 0,
        }
    }

    fn push(&mut self, x: &PrimalDualPoint, m: &SaTable) {
        let add = |acc: &mut [f64], y: &[f64]| {
            for (a, b) in acc.iter_mut().zip(y) {
                *a += b;
            }
        };
        add(self.sum.q.as_mut_slice(), x.q.as_slice());
        add(&mut self.sum.v, &x.v);
        add(self.sum.lam.as_mut_slice(), x.lam.as_slice());
        for ((a, mu), w) in self.sum.mu.as_mut_slice().iter_mut().zip(x.mu.as_slice()).zip(m.as_slice()) {
            *a += w * mu;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `(x_hat, y_hat)` in the form the duality gap expects.
    pub fn point(&self) -> PrimalDualPoint {
        let n = self.count as f64;
        let scale = |t: &SaTable| {
            let mut t = t.clone();
            for x in t.as_mut_slice() {
                *x /= n;
            }
            t
        };
        PrimalDualPoint {
            q: scale(&self.sum.q),
            v: self.sum.v.iter().map(|x| x / n).collect(),
            lam: scale(&self.sum.lam),
            mu: scale(&self.sum.mu),
        }
    }
}

/// Iterates [`deterministic_pd_step`] from `start` for `config.iterations`
/// steps with measures from `measures`.
pub fn deterministic_pd_run(
    start: PrimalDualPoint,
    problem: &SaddleProblem<'_>,
    measures: &mut dyn crate::schedule::MeasureSchedule,
    sets: &FeasibleSets,
    config: &RunConfig,
    observer: &mut dyn FnMut(usize, &DeterministicAverages, &PrimalDualPoint) -> Result<()>,
) -> Result<(PrimalDualPoint, DeterministicAverages)> {
    config.validate()?;
    let mut x = start;
    let mut avg = DeterministicAverages::new(sets.n_states(), sets.n_actions());
    let mut cps = config.checkpoints.iter().peekable();
    for k in 0..config.iterations {
        let m = measures.measure_at(k);
        avg.push(&x, &m);
        x = deterministic_pd_step(&x, problem, &m, config.steps.at(k), sets)?;
        if x.v.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure {
                message: format!("non-finite iterate at step {k}"),
                partial: linalg::norm_inf(&x.v),
            });
        }
        while cps.peek().is_some_and(|&&c| c < k + 1) {
            cps.next();
        }
        if cps.peek() == Some(&&(k + 1)) {
            cps.next();
            observer(k + 1, &avg, &x)?;
        }
    }
    Ok((x, avg))
}
