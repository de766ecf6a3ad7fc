use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{self, MdpModel};
use crate::oracle::{solve_optimal, SaddleProblem};
use crate::schedule::{self, DistributionSchedule, MeasureSchedule};

/// Checked-in reference values for the two-state instance.
pub const TWO_STATE_GOLDEN: &str = include_str!("../../golden/two_state.toml");

/// Oracle and schedule constants of one configured problem. Tables are
/// indexed `[state][action]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub zeta: f64,
    pub lambda2: f64,
    pub pi_star: Vec<usize>,
    pub v_star: Vec<f64>,
    pub q_star: Vec<Vec<f64>>,
    pub lambda_star: Vec<Vec<f64>>,
    pub mu_star_scaled: Vec<Vec<f64>>,
    pub p_theta: Vec<Vec<f64>>,
    pub v_infinity: Vec<f64>,
    pub m_infinity: Vec<Vec<f64>>,
}

impl Constants {
    /// Solves the problem weighted by the schedule's limiting measure.
    pub fn compute(model: &MdpModel, sched: &DistributionSchedule, eta: Vec<f64>) -> Result<Self> {
        let problem = SaddleProblem::new(model, eta, sched.m_infinity().clone(), sched.zeta())?;
        let sol = solve_optimal(&problem, 1e-12)?;
        Ok(Self {
            zeta: sched.zeta(),
            lambda2: sched.second_eigenvalue()?,
            pi_star: sol.pi_star.actions().to_vec(),
            v_star: sol.v_star.clone(),
            q_star: sol.q_star.to_state_rows(),
            lambda_star: sol.lambda_star.to_state_rows(),
            mu_star_scaled: sol.mu_star_scaled.to_state_rows(),
            p_theta: sched.behavior_transitions().to_rows(),
            v_infinity: sched.stationary().to_vec(),
            m_infinity: sched.m_infinity().to_state_rows(),
        })
    }

    /// The two-state instance with `eta = [0.1, 0.1]` and its default schedule.
    pub fn two_state() -> Result<Self> {
        let model = mdp::two_state_mdp();
        let sched = schedule::two_state_schedule(&model)?;
        Self::compute(&model, &sched, vec![0.1, 0.1])
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Golden(format!("golden file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("constants serialize")
    }

    /// Every scalar with a path-like name such as `q_star[1][0]`.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("zeta".to_string(), self.zeta),
            ("lambda2".to_string(), self.lambda2),
        ];
        let vector = |out: &mut Vec<(String, f64)>, name: &str, v: &[f64]| {
            for (i, x) in v.iter().enumerate() {
                out.push((format!("{name}[{i}]"), *x));
            }
        };
        let table = |out: &mut Vec<(String, f64)>, name: &str, t: &[Vec<f64>]| {
            for (i, row) in t.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    out.push((format!("{name}[{i}][{j}]"), *x));
                }
            }
        };
        let pi: Vec<f64> = self.pi_star.iter().map(|&a| a as f64).collect();
        vector(&mut out, "pi_star", &pi);
        vector(&mut out, "v_star", &self.v_star);
        table(&mut out, "q_star", &self.q_star);
        table(&mut out, "lambda_star", &self.lambda_star);
        table(&mut out, "mu_star_scaled", &self.mu_star_scaled);
        table(&mut out, "p_theta", &self.p_theta);
        vector(&mut out, "v_infinity", &self.v_infinity);
        table(&mut out, "m_infinity", &self.m_infinity);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenEntry {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
}

impl GoldenEntry {
    pub fn delta(&self) -> f64 {
        (self.actual - self.expected).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenReport {
    pub tolerance: f64,
    pub entries: Vec<GoldenEntry>,
    /// Names present on only one side.
    pub missing: Vec<String>,
}

impl GoldenReport {
    pub fn failures(&self) -> Vec<&GoldenEntry> {
        self.entries.iter().filter(|e| !(e.delta() <= self.tolerance)).collect()
    }

    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.failures().is_empty()
    }

    pub fn max_delta(&self) -> f64 {
        self.entries.iter().map(GoldenEntry::delta).fold(0.0, f64::max)
    }
}

impl fmt::Display for GoldenReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let mark = if e.delta() <= self.tolerance { "ok  " } else { "FAIL" };
            writeln!(
                f,
                "{mark} {:<22} expected {:>12.6} actual {:>12.6} delta {:.3e}",
                e.name,
                e.expected,
                e.actual,
                e.delta()
            )?;
        }
        for m in &self.missing {
            writeln!(f, "FAIL {m} missing on one side")?;
        }
        write!(
            f,
            "{} at tolerance {:e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.tolerance
        )
    }
}

/// Compares `actual` entry by entry against the reference text.
pub fn compare(golden_text: &str, actual: &Constants, tolerance: f64) -> Result<GoldenReport> {
    let expected = Constants::parse(golden_text)?;
    let exp = expected.entries();
    let act = actual.entries();
    let mut entries = Vec::new();
    let mut missing = Vec::new();
    for (name, e) in &exp {
        match act.iter().find(|(n, _)| n == name) {
            Some((_, a)) => entries.push(GoldenEntry {
                name: name.clone(),
                expected: *e,
                actual: *a,
            }),
            None => missing.push(name.clone()),
        }
    }
    for (name, _) in &act {
        if !exp.iter().any(|(n, _)| n == name) {
            missing.push(name.clone());
        }
    }
    Ok(GoldenReport {
        tolerance,
        entries,
        missing,
    })
}

/// Recomputes the two-state constants and compares them to the checked-in file.
pub fn golden_regression(tolerance: f64) -> Result<GoldenReport> {
    compare(TWO_STATE_GOLDEN, &Constants::two_state()?, tolerance)
}
