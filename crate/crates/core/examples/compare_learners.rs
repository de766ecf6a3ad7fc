//! Runs every learner on the same two-state trajectories and prints the
//! median of each metric at the last checkpoint.
//!
//! cargo run --release --example compare_learners -- [iterations]

use spdq::harness::{run_traces, worker_count, ExperimentConfig};

fn main() -> Result<(), spdq::Error> {
    let iterations: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let cfg = ExperimentConfig::parse(&format!(
        r#"
seeds = [1, 2, 3, 4, 5]
metrics = ["q_error", "dual_policy_error", "value_suboptimality"]
[model]
kind = "two_state"
[run]
iterations = {iterations}
gamma0 = [1.0]
eta = 1.5
algorithms = ["spdq", "qlearning", "spdrl_corrected", "deterministic_pd"]
"#
    ))?;
    let traces = run_traces(&cfg, worker_count()?)?;
    for alg in &cfg.run.algorithms {
        print!("{:<18}", alg.name());
        for metric in &cfg.metrics {
            let mut last: Vec<f64> = traces
                .iter()
                .filter(|(j, _)| j.algorithm == *alg)
                .filter_map(|(_, t)| t.series(metric.name()).last().map(|p| p.1))
                .collect();
            last.sort_by(|a, b| a.total_cmp(b));
            match last.get(last.len() / 2) {
                Some(m) => print!("  {}={m:.4}", metric.name()),
                None => print!("  {}=n/a", metric.name()),
            }
        }
        println!();
    }
    Ok(())
}
