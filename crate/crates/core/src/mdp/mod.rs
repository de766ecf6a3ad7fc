//! Finite discounted MDPs: transition tensors, reward models, policies,
//! exact policy evaluation and transition sampling.

mod file;
mod grid;
mod policy;

pub use file::MdpFile;
pub use grid::{grid_world, GridAction};
pub use policy::{DeterministicPolicy, StochasticPolicy};

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Matrix};

const ROW_SUM_TOL: f64 = 1e-12;

/// A real value per (state, action) pair, stored action-major so that block
/// `a` is the contiguous vector `[x_a(0), ..., x_a(n_states - 1)]`. This is
/// the stacked layout `[x_1; ...; x_|A|]` used by the LP formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SaTable {
    n_states: usize,
    n_actions: usize,
    data: Vec<f64>,
}

impl SaTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::filled(n_states, n_actions, 0.0)
    }

    pub fn filled(n_states: usize, n_actions: usize, value: f64) -> Self {
        Self {
            n_states,
            n_actions,
            data: vec![value; n_states * n_actions],
        }
    }

    /// Builds a table from rows indexed by state, each holding one value per action.
    pub fn from_state_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, Vec::len);
        let mut t = Self::zeros(n_states, n_actions);
        for (s, row) in rows.iter().enumerate() {
            check_len("state row width", n_actions, row.len())?;
            for (a, &x) in row.iter().enumerate() {
                t.set(s, a, x);
            }
        }
        Ok(t)
    }

    /// Builds a table from the stacked action-major vector.
    pub fn from_stacked(n_states: usize, n_actions: usize, data: Vec<f64>) -> Result<Self> {
        check_len("stacked state-action vector", n_states * n_actions, data.len())?;
        Ok(Self {
            n_states,
            n_actions,
            data,
        })
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize) -> usize {
        a * self.n_states + s
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.data[a * self.n_states + s]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.data[a * self.n_states + s] = value;
    }

    #[inline]
    pub fn add(&mut self, s: usize, a: usize, delta: f64) {
        self.data[a * self.n_states + s] += delta;
    }

    /// Block `a`: the vector over states for a fixed action.
    pub fn block(&self, a: usize) -> &[f64] {
        &self.data[a * self.n_states..(a + 1) * self.n_states]
    }

    pub fn state_row(&self, s: usize) -> Vec<f64> {
        (0..self.n_actions).map(|a| self.get(s, a)).collect()
    }

    pub fn set_state_row(&mut self, s: usize, row: &[f64]) {
        for (a, &x) in row.iter().enumerate() {
            self.set(s, a, x);
        }
    }

    pub fn to_state_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_states).map(|s| self.state_row(s)).collect()
    }

    /// Stacked action-major view.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Sum over actions for each state.
    pub fn action_sums(&self) -> Vec<f64> {
        (0..self.n_states)
            .map(|s| (0..self.n_actions).map(|a| self.get(s, a)).sum())
            .collect()
    }

    pub fn same_shape(&self, other: &SaTable) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }
}

/// Reward law attached to each transition.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardModel {
    /// `r(s, a)`, independent of the next state.
    Deterministic(SaTable),
    /// Uniform on `[lo(s, a), hi(s, a)]`.
    UniformInterval { lo: SaTable, hi: SaTable },
    /// `r(s, a, s')`; indexed `(s * n_actions + a) * n_states + s'`.
    PerTransition {
        n_states: usize,
        n_actions: usize,
        table: Vec<f64>,
    },
}

impl RewardModel {
    pub fn expected(&self, s: usize, a: usize, next: usize) -> f64 {
        match self {
            RewardModel::Deterministic(t) => t.get(s, a),
            RewardModel::UniformInterval { lo, hi } => 0.5 * (lo.get(s, a) + hi.get(s, a)),
            RewardModel::PerTransition {
                n_states,
                n_actions,
                table,
            } => table[(s * n_actions + a) * n_states + next],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, next: usize, rng: &mut R) -> f64 {
        match self {
            RewardModel::UniformInterval { lo, hi } => {
                let (l, h) = (lo.get(s, a), hi.get(s, a));
                if h > l {
                    rng.gen_range(l..=h)
                } else {
                    l
                }
            }
            _ => self.expected(s, a, next),
        }
    }

    fn validate(&self, n_states: usize, n_actions: usize, sigma: f64) -> Result<()> {
        let in_range = |x: f64| x.is_finite() && (0.0..=sigma).contains(&x);
        match self {
            RewardModel::Deterministic(t) => {
                check_shape(t, n_states, n_actions)?;
                if let Some(x) = t.as_slice().iter().find(|&&x| !in_range(x)) {
                    return Err(Error::InvalidArgument(format!(
                        "reward {x} outside [0, sigma={sigma}]"
                    )));
                }
            }
            RewardModel::UniformInterval { lo, hi } => {
                check_shape(lo, n_states, n_actions)?;
                check_shape(hi, n_states, n_actions)?;
                for (l, h) in lo.as_slice().iter().zip(hi.as_slice()) {
                    if !(in_range(*l) && in_range(*h) && l <= h) {
                        return Err(Error::InvalidArgument(format!(
                            "reward interval [{l}, {h}] is not a sub-interval of [0, {sigma}]"
                        )));
                    }
                }
            }
            RewardModel::PerTransition {
                n_states: ns,
                n_actions: na,
                table,
            } => {
                if *ns != n_states || *na != n_actions {
                    return Err(Error::InvalidArgument(
                        "per-transition reward table has the wrong shape".into(),
                    ));
                }
                check_len("per-transition reward table", ns * na * ns, table.len())?;
                if let Some(x) = table.iter().find(|&&x| !in_range(x)) {
                    return Err(Error::InvalidArgument(format!(
                        "reward {x} outside [0, sigma={sigma}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_shape(t: &SaTable, n_states: usize, n_actions: usize) -> Result<()> {
    check_len("table states", n_states, t.n_states())?;
    check_len("table actions", n_actions, t.n_actions())
}

/// A finite discounted MDP `(S, A, P, R, alpha)` with reward bound `sigma`.
#[derive(Debug, Clone)]
pub struct MdpModel {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<Matrix>,
    rewards: RewardModel,
    discount: f64,
    sigma: f64,
    expected_rewards: SaTable,
}

impl MdpModel {
    /// `transitions[a]` is the row-stochastic matrix `P_a`.
    pub fn new(
        transitions: Vec<Matrix>,
        rewards: RewardModel,
        discount: f64,
        sigma: f64,
    ) -> Result<Self> {
        let n_actions = transitions.len();
        if n_actions == 0 {
            return Err(Error::InvalidArgument("at least one action is required".into()));
        }
        let n_states = transitions[0].rows();
        if n_states == 0 {
            return Err(Error::InvalidArgument("at least one state is required".into()));
        }
        for (a, p) in transitions.iter().enumerate() {
            check_len("transition rows", n_states, p.rows())?;
            check_len("transition columns", n_states, p.cols())?;
            for s in 0..n_states {
                let row = p.row(s);
                if row.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::InvalidArgument(format!(
                        "negative or NaN transition probability in P_{a}({s}, .)"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "row P_{a}({s}, .) sums to {sum}, not 1"
                    )));
                }
            }
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidArgument(format!(
                "discount {discount} must lie in [0, 1)"
            )));
        }
        if !(sigma >= 1.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma {sigma} must be >= 1")));
        }
        rewards.validate(n_states, n_actions, sigma)?;

        let mut expected_rewards = SaTable::zeros(n_states, n_actions);
        for (a, p) in transitions.iter().enumerate() {
            for s in 0..n_states {
                let r: f64 = match &rewards {
                    RewardModel::PerTransition { .. } => p
                        .row(s)
                        .iter()
                        .enumerate()
                        .map(|(next, prob)| prob * rewards.expected(s, a, next))
                        .sum(),
                    _ => rewards.expected(s, a, 0),
                };
                expected_rewards.set(s, a, r);
            }
        }

        Ok(Self {
            n_states,
            n_actions,
            transitions,
            rewards,
            discount,
            sigma,
            expected_rewards,
        })
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn discount(&self) -> f64 {
        self.discount
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `P_a`.
    pub fn transition(&self, a: usize) -> &Matrix {
        &self.transitions[a]
    }

    pub fn transitions(&self) -> &[Matrix] {
        &self.transitions
    }

    pub fn rewards(&self) -> &RewardModel {
        &self.rewards
    }

    /// `R_a(s) = sum_{s'} P_a(s, s') r(s, a, s')`.
    pub fn expected_rewards(&self) -> &SaTable {
        &self.expected_rewards
    }

    /// Upper bound `sigma / (1 - alpha)` on any value function.
    pub fn value_cap(&self) -> f64 {
        self.sigma / (1.0 - self.discount)
    }

    /// `(P V)` stacked over actions: entry `(s, a)` is `sum_{s'} P_a(s, s') V(s')`.
    pub fn stacked_p_times(&self, v: &[f64]) -> SaTable {
        let mut out = SaTable::zeros(self.n_states, self.n_actions);
        for (a, p) in self.transitions.iter().enumerate() {
            for (s, x) in p.mul_vec(v).into_iter().enumerate() {
                out.set(s, a, x);
            }
        }
        out
    }

    /// `P^T y` for a stacked state-action vector `y`.
    pub fn stacked_p_transpose_times(&self, y: &SaTable) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states];
        for (a, p) in self.transitions.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(p.tr_mul_vec(y.block(a))) {
                *o += x;
            }
        }
        out
    }

    pub(crate) fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.n_states {
            return Err(Error::InvalidArgument(format!(
                "state {s} out of range 0..{}",
                self.n_states
            )));
        }
        Ok(())
    }

    pub(crate) fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.n_actions {
            return Err(Error::InvalidArgument(format!(
                "action {a} out of range 0..{}",
                self.n_actions
            )));
        }
        Ok(())
    }

    fn check_policy(&self, policy: &StochasticPolicy) -> Result<()> {
        check_len("policy states", self.n_states, policy.n_states())?;
        check_len("policy actions", self.n_actions, policy.n_actions())
    }
}

/// `P_theta(s, s') = sum_a theta_s(a) P_a(s, s')`.
pub fn transition_matrix_under_policy(model: &MdpModel, policy: &StochasticPolicy) -> Result<Matrix> {
    model.check_policy(policy)?;
    let n = model.n_states();
    let mut out = Matrix::zeros(n, n);
    for s in 0..n {
        for a in 0..model.n_actions() {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for (next, p) in model.transition(a).row(s).iter().enumerate() {
                out[(s, next)] += w * p;
            }
        }
    }
    Ok(out)
}

/// `R_mu(s) = sum_a mu_s(a) R_a(s)`.
pub fn expected_reward_under_policy(model: &MdpModel, policy: &StochasticPolicy) -> Result<Vec<f64>> {
    model.check_policy(policy)?;
    let r = model.expected_rewards();
    Ok((0..model.n_states())
        .map(|s| {
            (0..model.n_actions())
                .map(|a| policy.prob(s, a) * r.get(s, a))
                .sum()
        })
        .collect())
}

/// Exact value of a fixed policy: solves `(I - alpha P_pi) V = R_pi`.
pub fn evaluate_policy(model: &MdpModel, policy: &StochasticPolicy) -> Result<Vec<f64>> {
    let p = transition_matrix_under_policy(model, policy)?;
    let r = expected_reward_under_policy(model, policy)?;
    let n = model.n_states();
    let mut a = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= model.discount() * p[(i, j)];
        }
    }
    linalg::solve(&a, &r).map_err(|e| {
        Error::InternalConsistency(format!("policy evaluation system failed to solve: {e}"))
    })
}

/// Draws `s' ~ P_a(s, .)` from a probability row.
pub(crate) fn sample_index<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// One environment transition: next state and a sampled reward.
pub fn sample_step<R: Rng + ?Sized>(
    model: &MdpModel,
    state: usize,
    action: usize,
    rng: &mut R,
) -> Result<(usize, f64)> {
    model.check_state(state)?;
    model.check_action(action)?;
    let next = sample_index(model.transition(action).row(state), rng);
    let reward = model.rewards().sample(state, action, next, rng);
    Ok((next, reward))
}

/// The two-state, two-action instance used throughout the experiments:
/// `alpha = 0.9`, `sigma = 3`, rewards `r(s, a)` independent of the next state.
pub fn two_state_mdp() -> MdpModel {
    let p1 = Matrix::from_rows(&[vec![0.2, 0.8], vec![0.3, 0.7]]).expect("static");
    let p2 = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.7, 0.3]]).expect("static");
    let rewards = SaTable::from_state_rows(&[vec![3.0, 2.0], vec![1.0, 1.0]]).expect("static");
    MdpModel::new(vec![p1, p2], RewardModel::Deterministic(rewards), 0.9, 3.0).expect("static")
}
