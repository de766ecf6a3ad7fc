//! Builds the 2x2 grid, prints its optimal actions and walks the greedy
//! policy from the bottom-left cell.
//!
//! cargo run --example grid_world

use spdq::mdp::{grid_world, sample_step, GridAction};
use spdq::oracle::{solve_optimal, SaddleProblem};
use spdq::harness::{rng_for, ENV_STREAM};

fn main() -> Result<(), spdq::Error> {
    let model = grid_world(2, 2, (0.0, 0.2), (1.0, 1.2), 0.9)?;
    let problem = SaddleProblem::unscaled(&model, vec![0.3; 4])?;
    let sol = solve_optimal(&problem, 1e-12)?;
    for s in 0..4 {
        println!(
            "state {s}: best {:?}, V* = {:.4}",
            GridAction::ALL[sol.pi_star.action(s)],
            sol.v_star[s]
        );
    }
    let mut rng = rng_for(1, ENV_STREAM);
    let mut s = 0;
    for step in 0..4 {
        let a = sol.pi_star.action(s);
        let (next, r) = sample_step(&model, s, a, &mut rng)?;
        println!("step {step}: {s} --{:?}--> {next}  reward {r:.3}", GridAction::ALL[a]);
        s = next;
    }
    Ok(())
}
