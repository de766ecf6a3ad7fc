use rand::Rng;

use super::config::{MetricKind, PolicyNorm};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{self, DeterministicPolicy, MdpModel, SaTable, StochasticPolicy};
use crate::oracle::{self, OracleSolution, PrimalDualPoint, SaddleProblem};

/// What a learner exposes at a checkpoint. Metrics whose input is missing
/// are not reported for that learner.
#[derive(Debug, Clone, Default)]
pub struct Estimate {
    pub q: Option<SaTable>,
    pub dual_policy: Option<StochasticPolicy>,
    /// Averaged point with the `M_k`-weighted `mu` average.
    pub gap_point: Option<PrimalDualPoint>,
}

pub struct MetricContext<'a> {
    pub model: &'a MdpModel,
    pub oracle: Option<&'a OracleSolution>,
    /// The unscaled problem the oracle solved.
    pub problem: Option<&'a SaddleProblem<'a>>,
    pub dual_norm: PolicyNorm,
    pub window: usize,
    pub start_state: usize,
}

/// `sum_a ||Q*_a - Q_a||_inf`.
pub fn q_error(q_star: &SaTable, q: &SaTable) -> f64 {
    (0..q.n_actions())
        .map(|a| {
            q_star
                .block(a)
                .iter()
                .zip(q.block(a))
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        })
        .sum()
}

/// `sum_s ||e_{pi*(s)} - pi(s, .)||` in the chosen norm.
pub fn policy_error(pi_star: &DeterministicPolicy, policy: &StochasticPolicy, norm: PolicyNorm) -> f64 {
    (0..policy.n_states())
        .map(|s| {
            let diff = policy
                .row(s)
                .iter()
                .enumerate()
                .map(|(a, p)| if a == pi_star.action(s) { 1.0 - p } else { *p });
            match norm {
                PolicyNorm::Inf => diff.fold(0.0f64, |m, d| m.max(d.abs())),
                PolicyNorm::L2 => diff.map(|d| d * d).sum::<f64>().sqrt(),
            }
        })
        .sum()
}

/// Mean sampled reward over `window` steps of `policy` from `start`.
pub fn rollout_reward<R: Rng + ?Sized>(
    model: &MdpModel,
    policy: &DeterministicPolicy,
    start: usize,
    window: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut s = start;
    let mut total = 0.0;
    for _ in 0..window {
        let (next, r) = mdp::sample_step(model, s, policy.action(s), rng)?;
        total += r;
        s = next;
    }
    Ok(total / window as f64)
}

/// `||V* - V^pi||_inf`.
pub fn value_suboptimality(model: &MdpModel, v_star: &[f64], policy: &StochasticPolicy) -> Result<f64> {
    let v = mdp::evaluate_policy(model, policy)?;
    let diff: Vec<f64> = v_star.iter().zip(&v).map(|(a, b)| a - b).collect();
    Ok(linalg::norm_inf(&diff))
}

pub fn compute_metric<R: Rng + ?Sized>(
    kind: MetricKind,
    est: &Estimate,
    ctx: &MetricContext<'_>,
    rng: &mut R,
) -> Result<Option<f64>> {
    let need_oracle = || {
        ctx.oracle
            .ok_or_else(|| Error::Config(format!("metric {} needs the oracle solution", kind.name())))
    };
    let value = match kind {
        MetricKind::QError => match &est.q {
            Some(q) => Some(q_error(&need_oracle()?.q_star, q)),
            None => None,
        },
        MetricKind::DualPolicyError => match &est.dual_policy {
            Some(p) => Some(policy_error(&need_oracle()?.pi_star, p, ctx.dual_norm)),
            None => None,
        },
        MetricKind::PrimalPolicyError => match &est.q {
            Some(q) => {
                let pi = crate::spdq::primal_policy(q).to_stochastic(q.n_actions());
                Some(policy_error(&need_oracle()?.pi_star, &pi, PolicyNorm::Inf))
            }
            None => None,
        },
        MetricKind::DualityGap => match &est.gap_point {
            Some(point) => {
                let sol = need_oracle()?;
                let problem = ctx
                    .problem
                    .ok_or_else(|| Error::Config("duality_gap needs the saddle problem".into()))?;
                Some(oracle::duality_gap(point, sol, problem)?.value())
            }
            None => None,
        },
        MetricKind::AvgReward => match &est.q {
            Some(q) => Some(rollout_reward(
                ctx.model,
                &crate::spdq::primal_policy(q),
                ctx.start_state,
                ctx.window,
                rng,
            )?),
            None => None,
        },
        MetricKind::ValueSuboptimality => match &est.dual_policy {
            Some(p) => Some(value_suboptimality(ctx.model, &need_oracle()?.v_star, p)?),
            None => None,
        },
    };
    Ok(value)
}
