//! Stochastic primal-dual Q-learning.
//!
//! Each step consumes one observed transition `(s_k, a_k, s_{k+1}, r_k)`
//! drawn under the behavior measure `M_k` and one uniformly drawn pair
//! `(s_hat, a_hat)`, and moves five coordinates of the iterate:
//!
//! ```text
//! Q(s_k, a_k)     += g mu(s_k, a_k)
//! Q(s_hat, a_hat) -= g |S||A| lambda(s_hat, a_hat)
//! V(s_hat)        -= g (|S| eta(s_hat) - |S||A| lambda(s_hat, a_hat))
//! V(s_{k+1})      -= g alpha mu(s_k, a_k)
//! lambda(s_hat, a_hat) += g |S||A| (Q(s_hat, a_hat) - V(s_hat))
//! mu(s_k, a_k)    += g (alpha V(s_{k+1}) + r_k - Q(s_k, a_k))
//! ```
//!
//! The dual lines read the iterate from before the step. Afterwards the
//! touched entries are projected back onto their sets. In expectation the
//! step is a projected gradient step on the `M_k`-weighted Lagrangian.

pub mod complexity;
mod gradients;
pub mod projection;
pub mod sampling;

use rand::Rng;

pub use complexity::{gradient_norm_bounds, sample_complexity, ComplexityInputs, ComplexityMode};
pub use gradients::{analytic_gradients, Gradients};
pub use projection::{project_lambda, project_lambda_table, project_mu, project_value_box};
pub use sampling::{IidSampler, RecordedStream, TrajectorySampler, Transition, TransitionSource};

use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::mdp::{DeterministicPolicy, SaTable, StochasticPolicy};
use crate::oracle::{self, PrimalDualPoint};
use crate::schedule::MeasureSchedule;

/// `gamma_k = gamma0 / sqrt(k + offset)`; the default offset is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub gamma0: f64,
    pub offset: f64,
}

impl StepSchedule {
    pub fn new(gamma0: f64) -> Result<Self> {
        Self::with_offset(gamma0, 1.0)
    }

    pub fn with_offset(gamma0: f64, offset: f64) -> Result<Self> {
        if !(gamma0 >= 0.0 && gamma0.is_finite()) || !(offset >= 1.0 && offset.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step schedule needs gamma0 >= 0 and offset >= 1 (got {gamma0}, {offset})"
            )));
        }
        Ok(Self { gamma0, offset })
    }

    pub fn at(&self, k: usize) -> f64 {
        self.gamma0 / (k as f64 + self.offset).sqrt()
    }
}

pub fn step_size(sched: &StepSchedule, k: usize) -> f64 {
    sched.at(k)
}

/// Boxes and the per-state sum constraint the iterates live in, together
/// with the problem data a step needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSets {
    n_states: usize,
    n_actions: usize,
    discount: f64,
    sigma: f64,
    eta: Vec<f64>,
    zeta: f64,
    value_cap: f64,
    lambda_cap: f64,
    mu_cap: f64,
}

impl FeasibleSets {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        discount: f64,
        sigma: f64,
        eta: Vec<f64>,
        zeta: f64,
    ) -> Result<Self> {
        check_len("eta", n_states, eta.len())?;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument("empty state or action space".into()));
        }
        if !(discount >= 0.0 && discount < 1.0) || !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= alpha < 1 and sigma > 0 (got {discount}, {sigma})"
            )));
        }
        if eta.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::InvalidArgument(format!("zeta {zeta} must lie in (0, 1]")));
        }
        let gap = 1.0 - discount;
        let eta_l1 = linalg::norm_1(&eta);
        Ok(Self {
            n_states,
            n_actions,
            discount,
            sigma,
            value_cap: sigma / gap,
            lambda_cap: eta_l1 / gap,
            mu_cap: eta_l1 / (zeta * gap),
            eta,
            zeta,
        })
    }

    pub fn for_model(model: &crate::MdpModel, eta: Vec<f64>, zeta: f64) -> Result<Self> {
        Self::new(
            model.n_states(),
            model.n_actions(),
            model.discount(),
            model.sigma(),
            eta,
            zeta,
        )
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn value_cap(&self) -> f64 {
        self.value_cap
    }

    pub fn lambda_cap(&self) -> f64 {
        self.lambda_cap
    }

    pub fn mu_cap(&self) -> f64 {
        self.mu_cap
    }

    /// `(K1, K2)` for these sets.
    pub fn gradient_bounds(&self) -> (f64, f64) {
        gradient_norm_bounds(
            self.n_states,
            self.n_actions,
            &self.eta,
            self.sigma,
            self.discount,
            self.zeta,
        )
        .expect("validated at construction")
    }

    /// Fails with a contract error naming the first violated constraint.
    pub fn check(&self, x: &IterateState) -> Result<()> {
        let (ns, na) = (self.n_states, self.n_actions);
        check_len("V", ns, x.v.len())?;
        for t in [&x.q, &x.lam, &x.mu] {
            check_len("state-action table", ns * na, t.as_slice().len())?;
        }
        let in_box = |v: f64, cap: f64| (0.0..=cap).contains(&v);
        if let Some(s) = x.v.iter().position(|&v| !in_box(v, self.value_cap)) {
            return Err(Error::Contract(format!("V({s}) = {} outside [0, {}]", x.v[s], self.value_cap)));
        }
        if let Some(i) = x.q.as_slice().iter().position(|&v| !in_box(v, self.value_cap)) {
            return Err(Error::Contract(format!("Q entry {i} outside [0, {}]", self.value_cap)));
        }
        if let Some(i) = x.lam.as_slice().iter().position(|&v| !in_box(v, self.lambda_cap)) {
            return Err(Error::Contract(format!("lambda entry {i} outside [0, {}]", self.lambda_cap)));
        }
        if let Some(i) = x.mu.as_slice().iter().position(|&v| !in_box(v, self.mu_cap)) {
            return Err(Error::Contract(format!("mu entry {i} outside [0, {}]", self.mu_cap)));
        }
        for (s, (sum, eta)) in x.lam.action_sums().iter().zip(&self.eta).enumerate() {
            if *sum < eta * (1.0 - 1e-12) {
                return Err(Error::Contract(format!(
                    "sum_a lambda({s}, a) = {sum} below eta = {eta}"
                )));
            }
        }
        Ok(())
    }
}

/// The learner's iterate `(Q, V, lambda, mu)` at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub q: SaTable,
    pub v: Vec<f64>,
    pub lam: SaTable,
    pub mu: SaTable,
    pub k: usize,
}

impl IterateState {
    /// Uniform draws in each box, with `lambda` then projected onto the
    /// sum constraint.
    pub fn initialize<R: Rng + ?Sized>(sets: &FeasibleSets, rng: &mut R) -> Result<Self> {
        let (ns, na) = (sets.n_states, sets.n_actions);
        let mut table = |cap: f64| {
            let data = (0..ns * na).map(|_| rng.gen::<f64>() * cap).collect();
            SaTable::from_stacked(ns, na, data)
        };
        let q = table(sets.value_cap)?;
        let lam = table(sets.lambda_cap)?;
        let mu = table(sets.mu_cap)?;
        let v = (0..ns).map(|_| rng.gen::<f64>() * sets.value_cap).collect();
        let lam = project_lambda_table(&lam, &sets.eta, sets.lambda_cap)?;
        Ok(Self { q, v, lam, mu, k: 0 })
    }

    pub fn from_point(point: PrimalDualPoint, k: usize) -> Self {
        Self {
            q: point.q,
            v: point.v,
            lam: point.lam,
            mu: point.mu,
            k,
        }
    }

    pub fn point(&self) -> PrimalDualPoint {
        PrimalDualPoint {
            q: self.q.clone(),
            v: self.v.clone(),
            lam: self.lam.clone(),
            mu: self.mu.clone(),
        }
    }
}

/// The uniformly drawn pair `(s_hat, a_hat)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformSample {
    pub state: usize,
    pub action: usize,
}

impl UniformSample {
    pub fn draw<R: Rng + ?Sized>(n_states: usize, n_actions: usize, rng: &mut R) -> Self {
        Self {
            state: rng.gen_range(0..n_states),
            action: rng.gen_range(0..n_actions),
        }
    }
}

/// One sparse stochastic gradient. Primal terms are descent directions
/// (`x -= g * term`), dual terms ascent directions (`y += g * term`).
/// Indices are action-major table indices (`V` uses state indices).
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGradient {
    pub q: [(usize, f64); 2],
    pub v: [(usize, f64); 2],
    pub lam: (usize, f64),
    pub mu: (usize, f64),
}

fn sparse_norm(terms: &[(usize, f64)]) -> f64 {
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for &(i, x) in terms {
        match merged.iter_mut().find(|(j, _)| *j == i) {
            Some((_, y)) => *y += x,
            None => merged.push((i, x)),
        }
    }
    merged.iter().map(|(_, x)| x * x).sum::<f64>().sqrt()
}

impl StochasticGradient {
    pub fn primal_norm(&self) -> f64 {
        // Q and V entries live in different blocks; offset V indices past Q
        let off = usize::MAX / 2;
        sparse_norm(&[
            self.q[0],
            self.q[1],
            (off + self.v[0].0, self.v[0].1),
            (off + self.v[1].0, self.v[1].1),
        ])
    }

    pub fn dual_norm(&self) -> f64 {
        (self.lam.1 * self.lam.1 + self.mu.1 * self.mu.1).sqrt()
    }
}

/// The sampled gradient at `x` for one transition and one uniform pair.
pub fn stochastic_gradient(
    x: &IterateState,
    env: &Transition,
    uni: UniformSample,
    sets: &FeasibleSets,
) -> StochasticGradient {
    let ns = sets.n_states as f64;
    let sa = (sets.n_states * sets.n_actions) as f64;
    let alpha = sets.discount;
    let env_idx = x.q.index(env.state, env.action);
    let uni_idx = x.q.index(uni.state, uni.action);
    let mu = x.mu.as_slice()[env_idx];
    let lam = x.lam.as_slice()[uni_idx];
    StochasticGradient {
        q: [(env_idx, -mu), (uni_idx, sa * lam)],
        v: [
            (uni.state, ns * sets.eta[uni.state] - sa * lam),
            (env.next_state, alpha * mu),
        ],
        lam: (uni_idx, sa * (x.q.as_slice()[uni_idx] - x.v[uni.state])),
        mu: (
            env_idx,
            alpha * x.v[env.next_state] + env.reward - x.q.as_slice()[env_idx],
        ),
    }
}

fn check_samples(sets: &FeasibleSets, env: &Transition, uni: UniformSample) -> Result<()> {
    let (ns, na) = (sets.n_states, sets.n_actions);
    if env.state >= ns || env.next_state >= ns || uni.state >= ns {
        return Err(Error::Contract(format!("sampled state out of range 0..{ns}")));
    }
    if env.action >= na || uni.action >= na {
        return Err(Error::Contract(format!("sampled action out of range 0..{na}")));
    }
    if !(env.reward >= 0.0 && env.reward <= sets.sigma) {
        return Err(Error::Contract(format!(
            "reward {} outside [0, {}]",
            env.reward, sets.sigma
        )));
    }
    Ok(())
}

/// Applies the sparse update and projects the touched entries.
fn apply_step(
    x: &mut IterateState,
    env: &Transition,
    uni: UniformSample,
    gamma: f64,
    sets: &FeasibleSets,
) -> Result<StochasticGradient> {
    let g = stochastic_gradient(x, env, uni, sets);
    {
        let q = x.q.as_mut_slice();
        for &(i, d) in &g.q {
            q[i] -= gamma * d;
        }
        for &(i, _) in &g.q {
            q[i] = projection::clamp(q[i], sets.value_cap);
        }
    }
    for &(s, d) in &g.v {
        x.v[s] -= gamma * d;
    }
    for &(s, _) in &g.v {
        x.v[s] = projection::clamp(x.v[s], sets.value_cap);
    }
    x.lam.as_mut_slice()[g.lam.0] += gamma * g.lam.1;
    let row = project_lambda(
        &x.lam.state_row(uni.state),
        sets.eta[uni.state],
        sets.lambda_cap,
    )?;
    x.lam.set_state_row(uni.state, &row);
    let mu = &mut x.mu.as_mut_slice()[g.mu.0];
    *mu = projection::clamp(*mu + gamma * g.mu.1, sets.mu_cap);
    x.k += 1;
    Ok(g)
}

/// One checked step: the entry state must satisfy every set constraint.
pub fn spdq_step(
    x: &mut IterateState,
    env: &Transition,
    uni: UniformSample,
    gamma: f64,
    sets: &FeasibleSets,
) -> Result<StochasticGradient> {
    sets.check(x)?;
    check_samples(sets, env, uni)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size {gamma}")));
    }
    apply_step(x, env, uni, gamma, sets)
}

/// Running sums of the pre-update iterates; means are taken on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningAverages {
    q_sum: SaTable,
    v_sum: Vec<f64>,
    lam_sum: SaTable,
    mu_weighted_sum: Option<SaTable>,
    count: usize,
}

impl RunningAverages {
    pub fn new(n_states: usize, n_actions: usize, weighted_mu: bool) -> Self {
        Self {
            q_sum: SaTable::zeros(n_states, n_actions),
            v_sum: vec![0.0; n_states],
            lam_sum: SaTable::zeros(n_states, n_actions),
            mu_weighted_sum: weighted_mu.then(|| SaTable::zeros(n_states, n_actions)),
            count: 0,
        }
    }

    /// Adds one iterate; `m` is the measure `M_k` the diagnostic `mu`
    /// average is weighted by.
    pub fn push(&mut self, x: &IterateState, m: Option<&SaTable>) -> Result<()> {
        add_into(self.q_sum.as_mut_slice(), x.q.as_slice());
        add_into(&mut self.v_sum, &x.v);
        add_into(self.lam_sum.as_mut_slice(), x.lam.as_slice());
        match (&mut self.mu_weighted_sum, m) {
            (Some(sum), Some(m)) => {
                for ((acc, mu), w) in sum.as_mut_slice().iter_mut().zip(x.mu.as_slice()).zip(m.as_slice()) {
                    *acc += w * mu;
                }
            }
            (None, _) => {}
            (Some(_), None) => {
                return Err(Error::Contract("weighted mu average needs M_k".into()));
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    fn mean_table(&self, t: &SaTable) -> SaTable {
        let mut out = t.clone();
        let n = self.count as f64;
        for x in out.as_mut_slice() {
            *x /= n;
        }
        out
    }

    pub fn q_bar(&self) -> SaTable {
        self.mean_table(&self.q_sum)
    }

    pub fn v_bar(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.v_sum.iter().map(|x| x / n).collect()
    }

    pub fn lam_bar(&self) -> SaTable {
        self.mean_table(&self.lam_sum)
    }

    /// `(1/T) sum_k M_k mu_k`, when tracked.
    pub fn mu_bar_weighted(&self) -> Option<SaTable> {
        self.mu_weighted_sum.as_ref().map(|t| self.mean_table(t))
    }

    /// `(x_hat, y_hat)` for the duality gap; requires the weighted `mu` average.
    pub fn averaged_point(&self) -> Result<PrimalDualPoint> {
        let mu = self
            .mu_bar_weighted()
            .ok_or_else(|| Error::Contract("weighted mu average was not tracked".into()))?;
        Ok(PrimalDualPoint {
            q: self.q_bar(),
            v: self.v_bar(),
            lam: self.lam_bar(),
            mu,
        })
    }
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub iterations: usize,
    pub steps: StepSchedule,
    /// Step counts after which the observer is called; strictly increasing.
    pub checkpoints: Vec<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("checkpoints must increase strictly".into()));
        }
        Ok(())
    }
}

/// `{ceil(10^(j / per_decade))} ∪ {T}` restricted to `1..=T`.
pub fn log_checkpoints(iterations: usize, per_decade: u32) -> Vec<usize> {
    let mut out = Vec::new();
    let per = per_decade.max(1) as f64;
    for j in 0.. {
        let e = 10f64.powf(j as f64 / per);
        // exact powers of ten must not be pushed up by rounding error
        let k = if (e - e.round()).abs() <= 1e-9 * e { e.round() } else { e.ceil() } as usize;
        if k > iterations {
            break;
        }
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    if out.last() != Some(&iterations) {
        out.push(iterations);
    }
    out
}

/// State handed to the observer after `k` steps, where the averages cover
/// iterates `0..k`.
pub struct Checkpoint<'a> {
    pub k: usize,
    pub averages: &'a RunningAverages,
    pub state: &'a IterateState,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub averages: RunningAverages,
    pub state: IterateState,
    /// Largest stochastic primal / dual gradient norm seen.
    pub max_primal_gradient: f64,
    pub max_dual_gradient: f64,
    pub gradient_bounds: (f64, f64),
}

/// Runs the learner for `config.iterations` steps.
///
/// With `measures` present the run is in diagnostic mode: the
/// `M_k`-weighted `mu` average is tracked so the duality gap can be
/// evaluated. Every stochastic gradient is checked against `(K1, K2)` and
/// the iterate against its sets at each checkpoint (every step in debug
/// builds).
pub fn run<S, R>(
    source: &mut S,
    sets: &FeasibleSets,
    config: &RunConfig,
    mut measures: Option<&mut dyn MeasureSchedule>,
    rng: &mut R,
    observer: &mut dyn FnMut(&Checkpoint<'_>) -> Result<()>,
) -> Result<RunOutcome>
where
    S: TransitionSource + ?Sized,
    R: Rng + ?Sized,
{
    config.validate()?;
    if let Some(m) = measures.as_deref() {
        if m.zeta() < sets.zeta * (1.0 - 1e-12) {
            return Err(Error::InvalidSchedule(format!(
                "schedule floor {} is below the configured zeta {}",
                m.zeta(),
                sets.zeta
            )));
        }
    }
    let (k1, k2) = sets.gradient_bounds();
    let (slack1, slack2) = (k1 * (1.0 + 1e-12), k2 * (1.0 + 1e-12));
    let mut x = IterateState::initialize(sets, rng)?;
    let mut avg = RunningAverages::new(sets.n_states, sets.n_actions, measures.is_some());
    let mut next_cp = config.checkpoints.iter().peekable();
    let (mut max_p, mut max_d) = (0.0f64, 0.0f64);

    for k in 0..config.iterations {
        match measures.as_deref_mut() {
            Some(m) => avg.push(&x, Some(&m.measure_at(k)))?,
            None => avg.push(&x, None)?,
        }
        let env = source.next_transition(k)?;
        check_samples(sets, &env, UniformSample { state: 0, action: 0 })?;
        let uni = UniformSample::draw(sets.n_states, sets.n_actions, rng);
        let g = apply_step(&mut x, &env, uni, config.steps.at(k), sets)?;
        let (p, d) = (g.primal_norm(), g.dual_norm());
        if p > slack1 || d > slack2 {
            return Err(Error::InternalConsistency(format!(
                "step {k}: gradient norms ({p}, {d}) exceed bounds ({k1}, {k2})"
            )));
        }
        max_p = max_p.max(p);
        max_d = max_d.max(d);
        if cfg!(debug_assertions) {
            sets.check(&x)?;
        }
        while next_cp.peek().is_some_and(|&&c| c < k + 1) {
            next_cp.next();
        }
        if next_cp.peek() == Some(&&(k + 1)) {
            next_cp.next();
            sets.check(&x)?;
            observer(&Checkpoint {
                k: k + 1,
                averages: &avg,
                state: &x,
            })?;
        }
    }
    Ok(RunOutcome {
        averages: avg,
        state: x,
        max_primal_gradient: max_p,
        max_dual_gradient: max_d,
        gradient_bounds: (k1, k2),
    })
}

/// Greedy policy of an averaged `Q`, ties to the lowest action index.
pub fn primal_policy(q_bar: &SaTable) -> DeterministicPolicy {
    DeterministicPolicy::new(
        (0..q_bar.n_states())
            .map(|s| oracle::argmax_lowest(&q_bar.state_row(s), 0.0))
            .collect(),
    )
}

/// Row-normalized averaged `lambda`.
pub fn dual_policy(lam_bar: &SaTable) -> Result<StochasticPolicy> {
    oracle::dual_policy_of(lam_bar)
}
