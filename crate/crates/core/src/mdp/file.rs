//! MDP definition files.
//!
//! ```toml
//! n_states = 2
//! n_actions = 2
//! discount = 0.9
//! sigma = 3.0
//! # one row-major matrix per action: transitions[a][s][s']
//! transitions = [[[0.2, 0.8], [0.3, 0.7]], [[0.5, 0.5], [0.7, 0.3]]]
//!
//! [rewards]
//! kind = "deterministic"            # table[s][a]
//! table = [[3.0, 2.0], [1.0, 1.0]]
//! ```
//!
//! Other reward kinds: `uniform_interval` with `lo[s][a]` and `hi[s][a]`,
//! and `per_transition` with `table[s][a][s']`.

use serde::{Deserialize, Serialize};

use super::{MdpModel, RewardModel, SaTable};
use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub discount: f64,
    pub sigma: f64,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: RewardSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardSpec {
    Deterministic { table: Vec<Vec<f64>> },
    UniformInterval { lo: Vec<Vec<f64>>, hi: Vec<Vec<f64>> },
    PerTransition { table: Vec<Vec<Vec<f64>>> },
}

impl MdpFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("MDP definition: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("MDP definition serializes")
    }

    pub fn build(&self) -> Result<MdpModel> {
        check_len("transition matrices", self.n_actions, self.transitions.len())?;
        let transitions = self
            .transitions
            .iter()
            .map(|rows| {
                check_len("transition rows", self.n_states, rows.len())?;
                Matrix::from_rows(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        let table = |rows: &Vec<Vec<f64>>| -> Result<SaTable> {
            check_len("reward rows", self.n_states, rows.len())?;
            let t = SaTable::from_state_rows(rows)?;
            check_len("reward columns", self.n_actions, t.n_actions())?;
            Ok(t)
        };
        let rewards = match &self.rewards {
            RewardSpec::Deterministic { table: t } => RewardModel::Deterministic(table(t)?),
            RewardSpec::UniformInterval { lo, hi } => RewardModel::UniformInterval {
                lo: table(lo)?,
                hi: table(hi)?,
            },
            RewardSpec::PerTransition { table } => {
                check_len("reward rows", self.n_states, table.len())?;
                let mut flat = Vec::with_capacity(self.n_states * self.n_actions * self.n_states);
                for per_action in table {
                    check_len("reward actions", self.n_actions, per_action.len())?;
                    for per_next in per_action {
                        check_len("reward next states", self.n_states, per_next.len())?;
                        flat.extend_from_slice(per_next);
                    }
                }
                RewardModel::PerTransition {
                    n_states: self.n_states,
                    n_actions: self.n_actions,
                    table: flat,
                }
            }
        };
        MdpModel::new(transitions, rewards, self.discount, self.sigma)
    }

    pub fn from_model(model: &MdpModel) -> Self {
        let rewards = match model.rewards() {
            RewardModel::Deterministic(t) => RewardSpec::Deterministic {
                table: t.to_state_rows(),
            },
            RewardModel::UniformInterval { lo, hi } => RewardSpec::UniformInterval {
                lo: lo.to_state_rows(),
                hi: hi.to_state_rows(),
            },
            RewardModel::PerTransition {
                n_states,
                n_actions,
                table,
            } => RewardSpec::PerTransition {
                table: (0..*n_states)
                    .map(|s| {
                        (0..*n_actions)
                            .map(|a| {
                                let base = (s * n_actions + a) * n_states;
                                table[base..base + n_states].to_vec()
                            })
                            .collect()
                    })
                    .collect(),
            },
        };
        Self {
            n_states: model.n_states(),
            n_actions: model.n_actions(),
            discount: model.discount(),
            sigma: model.sigma(),
            transitions: model.transitions().iter().map(Matrix::to_rows).collect(),
            rewards,
        }
    }
}
