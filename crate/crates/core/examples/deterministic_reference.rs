//! Full-gradient primal-dual iteration on the two-state instance, the
//! expectation of the stochastic learner's dynamics.
//!
//! cargo run --release --example deterministic_reference -- [iterations] [gamma0]

use spdq::baselines::deterministic_pd_run;
use spdq::harness::{rng_for, LEARNER_STREAM};
use spdq::mdp::two_state_mdp;
use spdq::oracle::{duality_gap, solve_optimal, SaddleProblem};
use spdq::schedule::{two_state_schedule, MeasureSchedule};
use spdq::spdq::{log_checkpoints, FeasibleSets, IterateState, RunConfig, StepSchedule};

fn main() -> Result<(), spdq::Error> {
    let args: Vec<String> = std::env::args().collect();
    let iterations: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let gamma0: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);

    let model = two_state_mdp();
    let sched = two_state_schedule(&model)?;
    let eta = vec![1.5, 1.5];
    let problem = SaddleProblem::unscaled(&model, eta.clone())?;
    let sol = solve_optimal(&problem, 1e-12)?;
    let sets = FeasibleSets::for_model(&model, eta, sched.zeta())?;
    let config = RunConfig {
        iterations,
        steps: StepSchedule::new(gamma0)?,
        checkpoints: log_checkpoints(iterations, 2),
    };
    let start = IterateState::initialize(&sets, &mut rng_for(1, LEARNER_STREAM))?.point();
    let mut measures = sched.clone();
    deterministic_pd_run(
        start,
        &problem,
        &mut measures as &mut dyn MeasureSchedule,
        &sets,
        &config,
        &mut |k, avg, x| {
            let gap = duality_gap(&avg.point(), &sol, &problem)?;
            let last = duality_gap(x, &sol, &problem)?;
            println!("{k:>8} averaged gap {:>12.5e}  last-iterate gap {:>12.5e}", gap.value(), last.value());
            Ok(())
        },
    )?;
    Ok(())
}
