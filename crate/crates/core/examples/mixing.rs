//! Mixing diagnostics of a behavior schedule: second eigenvalue, the
//! measure floor over time and the drift bounds.
//!
//! cargo run --example mixing -- [horizon]

use spdq::mdp::two_state_mdp;
use spdq::schedule::{two_state_schedule, MeasureSchedule};

fn main() -> Result<(), spdq::Error> {
    let horizon: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let model = two_state_mdp();
    let mut sched = two_state_schedule(&model)?;
    println!("stationary {:?}", sched.stationary());
    println!("zeta {:.4} (estimated over {horizon} steps: {:.4})", sched.zeta(), sched.estimate_zeta(horizon)?);
    for k in [0, 1, 2, 5, 10] {
        println!("k = {k:>2}  v_k = {:?}  beta_k = {:.3e}", sched.state_distribution_at(k), sched.beta_at(k));
    }
    let report = sched.verify_mixing_bounds(horizon)?;
    println!("{report:#?}");
    Ok(())
}
