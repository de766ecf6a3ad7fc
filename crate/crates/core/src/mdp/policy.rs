use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;

const SIMPLEX_TOL: f64 = 1e-12;

/// A map from states to actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicPolicy {
    action_of: Vec<usize>,
}

impl DeterministicPolicy {
    pub fn new(action_of: Vec<usize>) -> Self {
        Self { action_of }
    }

    pub fn action(&self, s: usize) -> usize {
        self.action_of[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.action_of
    }

    pub fn n_states(&self) -> usize {
        self.action_of.len()
    }

    /// Embeds the policy as basis-vector rows.
    pub fn to_stochastic(&self, n_actions: usize) -> StochasticPolicy {
        let mut probs = Matrix::zeros(self.action_of.len(), n_actions);
        for (s, &a) in self.action_of.iter().enumerate() {
            probs[(s, a)] = 1.0;
        }
        StochasticPolicy { probs }
    }
}

/// Per-state action distributions `theta_s in Delta_|A|`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    probs: Matrix,
}

impl StochasticPolicy {
    pub fn new(probs: Matrix) -> Result<Self> {
        for s in 0..probs.rows() {
            let row = probs.row(s);
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "policy row {s} has a negative or NaN entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidArgument(format!(
                    "policy row {s} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let mut probs = Matrix::zeros(n_states, n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                probs[(s, a)] = 1.0 / n_actions as f64;
            }
        }
        Self { probs }
    }

    /// Row-normalizes a nonnegative weight table (rows indexed by state).
    pub fn from_weights(weights: &[Vec<f64>]) -> Result<Self> {
        let mut rows = Vec::with_capacity(weights.len());
        for (s, w) in weights.iter().enumerate() {
            let total: f64 = w.iter().sum();
            if !(total > 0.0) || w.iter().any(|&x| x < 0.0) {
                return Err(Error::Contract(format!(
                    "state {s} has no positive action weight"
                )));
            }
            rows.push(w.iter().map(|x| x / total).collect::<Vec<_>>());
        }
        Self::from_rows(&rows)
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        self.probs.row(s)
    }

    pub fn n_states(&self) -> usize {
        self.probs.rows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.probs
    }

    pub fn min_prob(&self) -> f64 {
        (0..self.n_states())
            .flat_map(|s| self.row(s).to_vec())
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_dims(&self, n_states: usize, n_actions: usize) -> Result<()> {
        check_len("policy states", n_states, self.n_states())?;
        check_len("policy actions", n_actions, self.n_actions())
    }
}
