//! Iteration counts guaranteeing a target gap or policy error, over a range
//! of tolerances.
//!
//! cargo run --example sample_complexity

use spdq::spdq::{gradient_norm_bounds, sample_complexity, ComplexityInputs, ComplexityMode};

fn main() -> Result<(), spdq::Error> {
    let (k1, k2) = gradient_norm_bounds(2, 2, &[1.5, 1.5], 3.0, 0.9, 0.0856)?;
    println!("gradient bounds on the two-state instance: primal {k1:.2}, dual {k2:.2}");
    let base = ComplexityInputs {
        epsilon: 0.1,
        delta: 0.05,
        n_states: 2,
        n_actions: 2,
        zeta: 0.0856,
        alpha: 0.9,
        sigma: 3.0,
        gamma0: 1.0,
        beta0: 0.0,
    };
    for epsilon in [0.5, 0.1, 0.01] {
        let p = ComplexityInputs { epsilon, ..base };
        println!(
            "epsilon {epsilon:<5} gap {:>26}  policy {:>26}",
            sample_complexity(&p, ComplexityMode::Gap)?,
            sample_complexity(&p, ComplexityMode::Policy)?
        );
    }
    Ok(())
}
