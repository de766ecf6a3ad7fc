//! Experiment configuration files.
//!
//! ```toml
//! seeds = [1, 2, 3]
//! metrics = ["q_error", "dual_policy_error", "duality_gap"]
//! output = "results"              # relative to the config file
//!
//! [model]
//! kind = "two_state"              # or "grid_world" / "file"
//!
//! [schedule]                      # optional; defaults depend on the model
//! behavior = [[0.2, 0.8], [0.7, 0.3]]   # or "uniform"
//! v0 = [0.4, 0.6]                 # or "uniform" / "stationary"
//! start_step = 1
//!
//! [run]
//! iterations = 100000
//! gamma0 = [1.0, 2.0]
//! algorithms = ["spdq", "qlearning"]
//! eta = 1.5                       # scalar fill or one entry per state
//! diagnostic = true
//! ```
//!
//! A grid world is `kind = "grid_world"` with `width`, `height` and optional
//! `step_reward`, `goal_reward` (intervals) and `discount`; an MDP file is
//! `kind = "file"` with `path`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{self, MdpFile, MdpModel, StochasticPolicy};
use crate::schedule::{self, DistributionSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub metrics: Vec<MetricKind>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub model: ModelSpec,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    pub run: RunSpec,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// `sum_a ||Q*_a - Q_hat_a||_inf`.
    QError,
    /// `sum_s ||pi*_s - pi_d_s||` for the normalized dual policy.
    DualPolicyError,
    /// `sum_s ||pi*_s - pi_p_s||_inf` for the greedy primal policy.
    PrimalPolicyError,
    DualityGap,
    /// Mean sampled reward of the greedy primal policy over a short rollout.
    AvgReward,
    /// `||V* - V^{pi_d}||_inf`.
    ValueSuboptimality,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::QError => "q_error",
            MetricKind::DualPolicyError => "dual_policy_error",
            MetricKind::PrimalPolicyError => "primal_policy_error",
            MetricKind::DualityGap => "duality_gap",
            MetricKind::AvgReward => "avg_reward",
            MetricKind::ValueSuboptimality => "value_suboptimality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoState,
    GridWorld {
        width: usize,
        height: usize,
        #[serde(default = "default_step_reward")]
        step_reward: (f64, f64),
        #[serde(default = "default_goal_reward")]
        goal_reward: (f64, f64),
        #[serde(default = "default_discount")]
        discount: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_step_reward() -> (f64, f64) {
    (0.0, 0.2)
}

fn default_goal_reward() -> (f64, f64) {
    (1.0, 1.2)
}

fn default_discount() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicySpec {
    Named(NamedPolicy),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedPolicy {
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Named(NamedInitial),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedInitial {
    Uniform,
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub behavior: PolicySpec,
    pub v0: InitialSpec,
    #[serde(default)]
    pub start_step: usize,
    /// Measure floor; estimated from the schedule when absent.
    #[serde(default)]
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Fill(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Spdq,
    Qlearning,
    SpdrlCorrected,
    DeterministicPd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Spdq => "spdq",
            Algorithm::Qlearning => "qlearning",
            Algorithm::SpdrlCorrected => "spdrl_corrected",
            Algorithm::DeterministicPd => "deterministic_pd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Trajectory,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyNorm {
    Inf,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub iterations: usize,
    pub gamma0: Vec<f64>,
    /// `gamma_k = gamma0 / sqrt(k + gamma_offset)`.
    #[serde(default = "default_gamma_offset")]
    pub gamma_offset: f64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Defaults to `sigma / |S|` in every entry.
    #[serde(default)]
    pub eta: Option<EtaSpec>,
    #[serde(default)]
    pub diagnostic: bool,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingMode,
    #[serde(default = "default_per_decade")]
    pub checkpoints_per_decade: u32,
    #[serde(default = "default_policy_norm")]
    pub dual_policy_norm: PolicyNorm,
    #[serde(default = "default_window")]
    pub avg_reward_window: usize,
}

fn default_gamma_offset() -> f64 {
    1.0
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Spdq]
}

fn default_sampling() -> SamplingMode {
    SamplingMode::Trajectory
}

fn default_per_decade() -> u32 {
    4
}

fn default_policy_norm() -> PolicyNorm {
    PolicyNorm::Inf
}

fn default_window() -> usize {
    8
}

/// Objective weights used by `oracle` snapshots, when they differ from the run's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub eta: EtaSpec,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate_fields()?;
        Ok(cfg)
    }

    /// Reads, parses and validates a config; relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let ModelSpec::File { path: p } = &mut cfg.model {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        if let ModelSpec::File { path: p } = &cfg.model {
            if !p.exists() {
                return Err(Error::Config(format!("model.path: {} does not exist", p.display())));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate_fields(&self) -> Result<()> {
        let fail = |field: &str, msg: &str| Err(Error::Config(format!("{field}: {msg}")));
        if self.seeds.is_empty() {
            return fail("seeds", "at least one seed is required");
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return fail("seeds", "duplicate seed");
        }
        if self.metrics.is_empty() {
            return fail("metrics", "at least one metric is required");
        }
        let run = &self.run;
        if run.iterations == 0 {
            return fail("run.iterations", "must be at least 1");
        }
        if run.gamma0.is_empty() || run.gamma0.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return fail("run.gamma0", "needs one or more positive step sizes");
        }
        if !(run.gamma_offset >= 1.0) {
            return fail("run.gamma_offset", "must be at least 1");
        }
        if run.algorithms.is_empty() {
            return fail("run.algorithms", "at least one algorithm is required");
        }
        if run.avg_reward_window == 0 {
            return fail("run.avg_reward_window", "must be positive");
        }
        if self.metrics.contains(&MetricKind::DualityGap)
            && run.algorithms.contains(&Algorithm::Spdq)
            && !run.diagnostic
        {
            return fail("metrics", "duality_gap for spdq requires run.diagnostic = true");
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<MdpModel> {
        match &self.model {
            ModelSpec::TwoState => Ok(mdp::two_state_mdp()),
            ModelSpec::GridWorld {
                width,
                height,
                step_reward,
                goal_reward,
                discount,
            } => mdp::grid_world(*width, *height, *step_reward, *goal_reward, *discount)
                .map_err(|e| Error::Config(format!("model: {e}"))),
            ModelSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("model.path {}: {e}", path.display())))?;
                MdpFile::parse(&text)?
                    .build()
                    .map_err(|e| Error::Config(format!("model file {}: {e}", path.display())))
            }
        }
    }

    /// The configured schedule, or the model's default one: the documented
    /// behavior policy for the two-state instance, otherwise a uniform
    /// behavior policy started from its stationary distribution.
    pub fn build_schedule(&self, model: &MdpModel) -> Result<DistributionSchedule> {
        let spec = match (&self.schedule, &self.model) {
            (Some(s), _) => s.clone(),
            (None, ModelSpec::TwoState) => return schedule::two_state_schedule(model),
            (None, _) => ScheduleSpec {
                behavior: PolicySpec::Named(NamedPolicy::Uniform),
                v0: InitialSpec::Named(NamedInitial::Stationary),
                start_step: 0,
                zeta: None,
            },
        };
        let (ns, na) = (model.n_states(), model.n_actions());
        let behavior = match &spec.behavior {
            PolicySpec::Named(NamedPolicy::Uniform) => StochasticPolicy::uniform(ns, na),
            PolicySpec::Rows(rows) => StochasticPolicy::from_rows(rows)
                .map_err(|e| Error::Config(format!("schedule.behavior: {e}")))?,
        };
        let v0 = match &spec.v0 {
            InitialSpec::Named(NamedInitial::Uniform) => vec![1.0 / ns as f64; ns],
            InitialSpec::Named(NamedInitial::Stationary) => {
                let p = mdp::transition_matrix_under_policy(model, &behavior)?;
                schedule::stationary_distribution(&p)?
            }
            InitialSpec::Vector(v) => v.clone(),
        };
        DistributionSchedule::new(model, behavior, v0, spec.start_step, spec.zeta)
    }

    pub fn eta(&self, model: &MdpModel) -> Result<Vec<f64>> {
        eta_from(self.run.eta.as_ref(), model, "run.eta")
    }

    pub fn oracle_eta(&self, model: &MdpModel) -> Result<Vec<f64>> {
        match &self.oracle {
            Some(o) => eta_from(Some(&o.eta), model, "oracle.eta"),
            None => self.eta(model),
        }
    }
}

fn eta_from(spec: Option<&EtaSpec>, model: &MdpModel, field: &str) -> Result<Vec<f64>> {
    let ns = model.n_states();
    let eta = match spec {
        None => vec![model.sigma() / ns as f64; ns],
        Some(EtaSpec::Fill(x)) => vec![*x; ns],
        Some(EtaSpec::Vector(v)) => v.clone(),
    };
    if eta.len() != ns {
        return Err(Error::Config(format!("{field}: expected {ns} entries, got {}", eta.len())));
    }
    if eta.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("{field}: entries must be positive")));
    }
    Ok(eta)
}
