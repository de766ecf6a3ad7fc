//! Runs the learner on the two-state instance and prints checkpoint metrics.
//!
//! cargo run --release --example spdq_two_state -- [iterations] [gamma0] [seed]

use spdq::harness::{policy_error, q_error, rng_for, PolicyNorm, ENV_STREAM, LEARNER_STREAM};
use spdq::mdp::two_state_mdp;
use spdq::oracle::{duality_gap, policy_suboptimality_bound, solve_optimal, SaddleProblem};
use spdq::schedule::{two_state_schedule, MeasureSchedule};
use spdq::spdq::{dual_policy, log_checkpoints, primal_policy, run, FeasibleSets, RunConfig, StepSchedule, TrajectorySampler};

fn main() -> Result<(), spdq::Error> {
    let args: Vec<String> = std::env::args().collect();
    let iterations: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let gamma0: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);

    let model = two_state_mdp();
    let sched = two_state_schedule(&model)?;
    let eta = vec![1.5, 1.5];
    let problem = SaddleProblem::unscaled(&model, eta.clone())?;
    let sol = solve_optimal(&problem, 1e-12)?;
    let sets = FeasibleSets::for_model(&model, eta, sched.zeta())?;
    let config = RunConfig {
        iterations,
        steps: StepSchedule::new(gamma0)?,
        checkpoints: log_checkpoints(iterations, 4),
    };

    let mut source = TrajectorySampler::new(&model, &mut sched.clone(), rng_for(seed, ENV_STREAM));
    let mut measures = sched.clone();
    println!("{:>8} {:>12} {:>12} {:>8} {:>8} {:>12}", "k", "gap", "q_error", "primal", "dual", "v_subopt");
    let outcome = run(
        &mut source,
        &sets,
        &config,
        Some(&mut measures as &mut dyn MeasureSchedule),
        &mut rng_for(seed, LEARNER_STREAM),
        &mut |cp| {
            let point = cp.averages.averaged_point()?;
            let gap = duality_gap(&point, &sol, &problem)?;
            let pd = dual_policy(&point.lam)?;
            let pp = primal_policy(&point.q).to_stochastic(2);
            let subopt = spdq::harness::value_suboptimality(&model, &sol.v_star, &pd)?;
            println!(
                "{:>8} {:>12.5e} {:>12.5} {:>8.3} {:>8.3} {:>12.5} (bound {:.3})",
                cp.k,
                gap.value(),
                q_error(&sol.q_star, &point.q),
                policy_error(&sol.pi_star, &pp, PolicyNorm::Inf),
                policy_error(&sol.pi_star, &pd, PolicyNorm::Inf),
                subopt,
                policy_suboptimality_bound(gap.value(), &problem)?,
            );
            Ok(())
        },
    )?;
    let (k1, k2) = outcome.gradient_bounds;
    println!(
        "largest gradient norms: primal {:.3} (bound {k1:.3}), dual {:.3} (bound {k2:.3})",
        outcome.max_primal_gradient, outcome.max_dual_gradient
    );
    Ok(())
}
