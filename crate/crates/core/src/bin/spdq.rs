use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spdq::harness::{self, ExperimentConfig};
use spdq::spdq::{sample_complexity, ComplexityInputs, ComplexityMode};
use spdq::Error;

#[derive(Parser)]
#[command(version, about = "Stochastic primal-dual Q-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Gap,
    Policy,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run every job of an experiment config and write CSV traces.
    Run { config: PathBuf },
    /// Print the exact solution and schedule constants of a config's problem.
    Oracle { config: PathBuf },
    /// Recompute the two-state constants and compare them with the reference file.
    Golden {
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Iteration count guaranteeing a duality gap or policy error of epsilon.
    Complexity {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 0.0856)]
        zeta: f64,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long, default_value_t = 3.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma0: f64,
        #[arg(long, default_value_t = 0.0)]
        beta0: f64,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            for path in harness::run_experiment(&cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Oracle { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            print!("{}", harness::oracle_constants(&cfg)?.to_toml());
        }
        Command::Golden { tolerance } => {
            let report = harness::golden_regression(tolerance)?;
            println!("{report}");
            if !report.passed() {
                return Err(Error::Golden(format!(
                    "{} entries differ",
                    report.failures().len() + report.missing.len()
                )));
            }
        }
        Command::Complexity {
            epsilon,
            delta,
            states,
            actions,
            zeta,
            alpha,
            sigma,
            gamma0,
            beta0,
            mode,
        } => {
            let inputs = ComplexityInputs {
                epsilon,
                delta,
                n_states: states,
                n_actions: actions,
                zeta,
                alpha,
                sigma,
                gamma0,
                beta0,
            };
            if matches!(mode, Mode::Gap | Mode::Both) {
                println!("gap {}", sample_complexity(&inputs, ComplexityMode::Gap)?);
            }
            if matches!(mode, Mode::Policy | Mode::Both) {
                println!("policy {}", sample_complexity(&inputs, ComplexityMode::Policy)?);
            }
        }
    }
    Ok(())
}
