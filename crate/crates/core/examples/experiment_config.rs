//! Loads an experiment config, lists its jobs and writes their CSV traces.
//!
//! cargo run --release --example experiment_config -- configs/grid_world.toml

use spdq::harness::{config_hash, jobs, run_experiment, ExperimentConfig};

fn main() -> Result<(), spdq::Error> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/grid_world.toml".into());
    let cfg = ExperimentConfig::load(path.as_ref())?;
    println!("config {}", config_hash(&cfg));
    for job in jobs(&cfg) {
        println!("  {}", job.file_name());
    }
    for written in run_experiment(&cfg)? {
        println!("wrote {}", written.display());
    }
    Ok(())
}
