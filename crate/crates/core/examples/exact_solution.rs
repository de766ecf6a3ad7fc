//! Solves a small MDP exactly and prints the saddle point of its Lagrangian,
//! then checks it against a value-iteration fixed point.
//!
//! cargo run --example exact_solution -- [eta]

use spdq::mdp::{evaluate_policy, two_state_mdp};
use spdq::oracle::{duality_gap, lagrangian_i, solution_bounds, solve_optimal, SaddleProblem};

fn main() -> Result<(), spdq::Error> {
    let eta: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let model = two_state_mdp();
    let problem = SaddleProblem::unscaled(&model, vec![eta; 2])?;
    let sol = solve_optimal(&problem, 1e-12)?;
    print!("{}", sol.snapshot().to_toml());

    let v_pi = evaluate_policy(&model, &sol.pi_star.to_stochastic(2))?;
    println!("greedy policy value {v_pi:?}");

    let x = sol.saddle_point();
    println!("objective {:.6}", lagrangian_i(&x, &problem)?);
    println!("gap at the saddle point {:.3e}", duality_gap(&x, &sol, &problem)?.value());
    let bounds = solution_bounds(&problem, &sol)?;
    println!("bounds {bounds:?}");
    Ok(())
}
