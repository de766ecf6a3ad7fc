//! Gradient-norm constants and the iteration counts that guarantee a target
//! duality gap or policy suboptimality with high probability.

use crate::error::{Error, Result};
use crate::linalg;

/// `(K1, K2)`: bounds on the Euclidean norm of any single stochastic primal
/// and dual gradient, `K1 = sqrt(13) |S||A| ||eta||_1 / (zeta (1 - alpha))`
/// and `K2 = sqrt(13) |S||A| sigma / (1 - alpha)`.
pub fn gradient_norm_bounds(
    n_states: usize,
    n_actions: usize,
    eta: &[f64],
    sigma: f64,
    alpha: f64,
    zeta: f64,
) -> Result<(f64, f64)> {
    if !(zeta > 0.0) || !(alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gradient bounds need zeta > 0 and alpha < 1 (zeta {zeta}, alpha {alpha})"
        )));
    }
    let sa = (n_states * n_actions) as f64;
    let root13 = 13f64.sqrt();
    let k1 = root13 * sa * linalg::norm_1(eta) / (zeta * (1.0 - alpha));
    let k2 = root13 * sa * sigma / (1.0 - alpha);
    Ok((k1, k2))
}

/// Which guarantee the iteration count targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityMode {
    /// Duality gap of the averaged iterates at most `epsilon`.
    Gap,
    /// Dual policy within `epsilon` of optimal in sup norm.
    Policy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityInputs {
    pub epsilon: f64,
    pub delta: f64,
    pub n_states: usize,
    pub n_actions: usize,
    pub zeta: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub gamma0: f64,
    pub beta0: f64,
}

pub fn kappa1(n_states: usize, n_actions: usize, zeta: f64, gamma0: f64, beta0: f64) -> f64 {
    let sa = (n_states * n_actions) as f64;
    let inner = (12.0 + 4.0 * beta0) / (zeta * zeta * sa * sa * gamma0) + 26.0 * gamma0;
    inner * inner
}

pub fn kappa2(gamma0: f64) -> f64 {
    let r = 26f64.sqrt();
    (2184.0 + 416.0 * r) * gamma0 * gamma0 + (1066.0 + 416.0 * r) * gamma0 + 832.0 + 16.0 * r
}

/// Iteration count `T`, rounded up and saturated at `u64::MAX`.
pub fn sample_complexity(p: &ComplexityInputs, mode: ComplexityMode) -> Result<u64> {
    if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {} must lie in (0, 1)",
            p.epsilon
        )));
    }
    if !(p.delta > 0.0 && p.delta < (-1.0f64).exp()) {
        return Err(Error::InvalidArgument(format!(
            "delta {} must lie in (0, 1/e)",
            p.delta
        )));
    }
    if !(p.zeta > 0.0 && p.zeta <= 1.0) || !(p.alpha >= 0.0 && p.alpha < 1.0) {
        return Err(Error::InvalidArgument("zeta must be in (0, 1], alpha in [0, 1)".into()));
    }
    if !(p.gamma0 > 0.0) || !(p.beta0 >= 0.0) || !(p.sigma > 0.0) {
        return Err(Error::InvalidArgument(
            "gamma0 and sigma must be positive, beta0 nonnegative".into(),
        ));
    }
    let kappa = kappa1(p.n_states, p.n_actions, p.zeta, p.gamma0, p.beta0).max(kappa2(p.gamma0));
    let s = p.n_states as f64;
    let a = p.n_actions as f64;
    let gap = 1.0 - p.alpha;
    let mut t = kappa * p.sigma * p.sigma * s.powi(4) * a.powi(4) / (p.zeta.powi(4) * gap.powi(4))
        / (p.epsilon * p.epsilon)
        * (1.0 / p.delta).ln();
    if mode == ComplexityMode::Policy {
        t *= s * s / (gap * gap);
    }
    // `as` saturates for values beyond u64::MAX
    Ok(t.ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_bound_examples() {
        let (_, k2) = gradient_norm_bounds(2, 2, &[1.5, 1.5], 3.0, 0.9, 0.0856).unwrap();
        assert!((k2 - 432.67).abs() < 0.01);
        let (k1, _) = gradient_norm_bounds(1, 1, &[1.0], 1.0, 0.0, 1.0).unwrap();
        assert!((k1 - 13f64.sqrt()).abs() < 1e-15);
        assert!(gradient_norm_bounds(1, 1, &[1.0], 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert!((kappa1(1, 1, 1.0, 1.0, 0.0) - 1444.0).abs() < 1e-9);
        assert!((kappa2(0.0) - 913.5843).abs() < 1e-3);
    }

    #[test]
    fn policy_mode_scales_gap_mode() {
        let p = ComplexityInputs {
            epsilon: 0.5,
            delta: 0.1,
            n_states: 1,
            n_actions: 1,
            zeta: 1.0,
            alpha: 0.0,
            sigma: 1.0,
            gamma0: 1.0,
            beta0: 0.0,
        };
        let gap = sample_complexity(&p, ComplexityMode::Gap).unwrap();
        // kappa2(1) ~ 8406 dominates kappa1 = 1444; T = kappa * 4 * ln 10
        let r = 26f64.sqrt();
        let k2 = 2184.0 + 416.0 * r + 1066.0 + 416.0 * r + 832.0 + 16.0 * r;
        assert!((gap as f64 - (k2 * 4.0 * 10f64.ln()).ceil()).abs() <= 1.0);
        let q = ComplexityInputs { n_states: 3, alpha: 0.5, ..p };
        let g = sample_complexity(&q, ComplexityMode::Gap).unwrap() as f64;
        let pol = sample_complexity(&q, ComplexityMode::Policy).unwrap() as f64;
        assert!((pol / g - 36.0).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        let p = ComplexityInputs {
            epsilon: 0.5,
            delta: 0.5,
            n_states: 1,
            n_actions: 1,
            zeta: 1.0,
            alpha: 0.0,
            sigma: 1.0,
            gamma0: 1.0,
            beta0: 0.0,
        };
        assert!(sample_complexity(&p, ComplexityMode::Gap).is_err());
        let p = ComplexityInputs { delta: 0.1, epsilon: 1.0, ..p };
        assert!(sample_complexity(&p, ComplexityMode::Gap).is_err());
    }

    #[test]
    fn saturates_instead_of_wrapping() {
        let p = ComplexityInputs {
            epsilon: 1e-9,
            delta: 1e-300,
            n_states: 1000,
            n_actions: 100,
            zeta: 1e-8,
            alpha: 0.999,
            sigma: 10.0,
            gamma0: 1.0,
            beta0: 10.0,
        };
        assert_eq!(sample_complexity(&p, ComplexityMode::Policy).unwrap(), u64::MAX);
    }
}
