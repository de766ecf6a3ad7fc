//! Configured experiments: seed and step-size sweeps, checkpoint metrics and
//! CSV traces.
//!
//! Every `(algorithm, gamma0, seed)` job is independent. Its random streams
//! come from `ChaCha8Rng::seed_from_u64(seed)` with the stream number
//! selecting the purpose ([`ENV_STREAM`] for the environment,
//! [`LEARNER_STREAM`] for initialization and uniform draws,
//! [`EVAL_STREAM`] for evaluation rollouts). Jobs with the same seed thus
//! share one environment trajectory, and results do not depend on how jobs
//! are spread over worker threads.

mod config;
mod golden;
mod metrics;
mod trace;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use config::{
    Algorithm, EtaSpec, ExperimentConfig, InitialSpec, MetricKind, ModelSpec, NamedInitial,
    NamedPolicy, OracleSpec, PolicyNorm, PolicySpec, RunSpec, SamplingMode, ScheduleSpec,
};
pub use golden::{compare, golden_regression, Constants, GoldenEntry, GoldenReport, TWO_STATE_GOLDEN};
pub use metrics::{
    compute_metric, policy_error, q_error, rollout_reward, value_suboptimality, Estimate,
    MetricContext,
};
pub use trace::RunTrace;

use crate::baselines::{self, Correction};
use crate::error::{Error, Result};
use crate::oracle::{solve_optimal, SaddleProblem};
use crate::schedule::MeasureSchedule;
use crate::spdq::{
    self, FeasibleSets, IidSampler, IterateState, RunConfig, StepSchedule, TrajectorySampler,
    TransitionSource,
};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "SPDQ_WORKERS";

pub const ENV_STREAM: u64 = 0;
pub const LEARNER_STREAM: u64 = 1;
pub const EVAL_STREAM: u64 = 2;

/// The random stream for one purpose of one seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub algorithm: Algorithm,
    pub gamma0: f64,
    pub seed: u64,
}

impl Job {
    pub fn file_name(&self) -> String {
        format!("{}_g{}_s{}.csv", self.algorithm.name(), self.gamma0, self.seed)
    }
}

/// All jobs of a config, ordered by algorithm, step size, then seed.
pub fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &algorithm in &cfg.run.algorithms {
        for &gamma0 in &cfg.run.gamma0 {
            for &seed in &cfg.seeds {
                out.push(Job {
                    algorithm,
                    gamma0,
                    seed,
                });
            }
        }
    }
    out
}

/// SHA-256 of the normalized config, ignoring where output goes.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output = PathBuf::new();
    hex::encode(Sha256::digest(c.to_toml().as_bytes()))
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{WORKERS_ENV}={v} is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs one job in memory.
pub fn run_job(cfg: &ExperimentConfig, job: &Job) -> Result<RunTrace> {
    let model = cfg.build_model()?;
    let sched = cfg.build_schedule(&model)?;
    let eta = cfg.eta(&model)?;
    let sets = FeasibleSets::for_model(&model, eta.clone(), sched.zeta())?;
    let problem = SaddleProblem::unscaled(&model, eta)?;
    let sol = solve_optimal(&problem, 1e-12)?;
    let run_cfg = RunConfig {
        iterations: cfg.run.iterations,
        steps: StepSchedule::with_offset(job.gamma0, cfg.run.gamma_offset)?,
        checkpoints: spdq::log_checkpoints(cfg.run.iterations, cfg.run.checkpoints_per_decade),
    };

    let mut trace = RunTrace::new(vec![
        ("config_hash".into(), config_hash(cfg)),
        ("seed".into(), job.seed.to_string()),
        ("algorithm".into(), job.algorithm.name().into()),
        ("gamma0".into(), job.gamma0.to_string()),
        ("version".into(), format!("spdq-{}", env!("CARGO_PKG_VERSION"))),
    ]);
    let ctx = MetricContext {
        model: &model,
        oracle: Some(&sol),
        problem: Some(&problem),
        dual_norm: cfg.run.dual_policy_norm,
        window: cfg.run.avg_reward_window,
        start_state: 0,
    };
    let mut eval_rng = rng_for(job.seed, EVAL_STREAM);
    let mut learner_rng = rng_for(job.seed, LEARNER_STREAM);
    let mut record = |k: usize, est: &Estimate| -> Result<()> {
        for &kind in &cfg.metrics {
            if let Some(v) = compute_metric(kind, est, &ctx, &mut eval_rng)? {
                trace.push(k, kind.name(), v)?;
            }
        }
        Ok(())
    };

    let env_rng = rng_for(job.seed, ENV_STREAM);
    let mut source: Box<dyn TransitionSource + '_> = match cfg.run.sampling {
        SamplingMode::Trajectory => Box::new(TrajectorySampler::new(&model, &mut sched.clone(), env_rng)),
        SamplingMode::Iid => Box::new(IidSampler::new(&model, sched.clone(), env_rng)),
    };

    match job.algorithm {
        Algorithm::Spdq => {
            let mut measures = sched.clone();
            let diagnostic = cfg.run.diagnostic;
            spdq::run(
                source.as_mut(),
                &sets,
                &run_cfg,
                diagnostic.then_some(&mut measures as &mut dyn MeasureSchedule),
                &mut learner_rng,
                &mut |cp| {
                    let est = Estimate {
                        q: Some(cp.averages.q_bar()),
                        dual_policy: Some(spdq::dual_policy(&cp.averages.lam_bar())?),
                        gap_point: if diagnostic {
                            Some(cp.averages.averaged_point()?)
                        } else {
                            None
                        },
                    };
                    record(cp.k, &est)
                },
            )?;
        }
        Algorithm::Qlearning => {
            baselines::q_learning_run(source.as_mut(), &sets, &run_cfg, &mut |k, st| {
                record(
                    k,
                    &Estimate {
                        q: Some(st.q.clone()),
                        ..Estimate::default()
                    },
                )
            })?;
        }
        Algorithm::SpdrlCorrected => {
            baselines::spd_rl_corrected_run(
                source.as_mut(),
                &sets,
                &run_cfg,
                &mut learner_rng,
                &mut |k, avg| {
                    record(
                        k,
                        &Estimate {
                            dual_policy: Some(avg.dual_policy(&Correction::Empirical)),
                            ..Estimate::default()
                        },
                    )
                },
            )?;
        }
        Algorithm::DeterministicPd => {
            let start = IterateState::initialize(&sets, &mut learner_rng)?.point();
            let mut measures = sched.clone();
            baselines::deterministic_pd_run(
                start,
                &problem,
                &mut measures,
                &sets,
                &run_cfg,
                &mut |k, avg, _| {
                    let point = avg.point();
                    let est = Estimate {
                        q: Some(point.q.clone()),
                        dual_policy: Some(spdq::dual_policy(&point.lam)?),
                        gap_point: Some(point),
                    };
                    record(k, &est)
                },
            )?;
        }
    }
    Ok(trace)
}

/// Runs every job on `workers` threads and returns the traces in job order.
pub fn run_traces(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<(Job, RunTrace)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InternalConsistency(format!("worker pool: {e}")))?;
    let all = jobs(cfg);
    pool.install(|| {
        all.par_iter()
            .map(|job| run_job(cfg, job).map(|t| (*job, t)))
            .collect()
    })
}

/// Runs every job and writes one CSV per job into the output directory.
/// Each file is written as soon as its job finishes.
pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<PathBuf>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InternalConsistency(format!("worker pool: {e}")))?;
    let all = jobs(cfg);
    pool.install(|| {
        all.par_iter()
            .map(|job| {
                let trace = run_job(cfg, job)?;
                let path = cfg.output.join(job.file_name());
                trace.write_atomic(&path)?;
                Ok(path)
            })
            .collect()
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    run_experiment_with_workers(cfg, worker_count()?)
}

/// Oracle and schedule constants of the configured problem.
pub fn oracle_constants(cfg: &ExperimentConfig) -> Result<Constants> {
    let model = cfg.build_model()?;
    let sched = cfg.build_schedule(&model)?;
    Constants::compute(&model, &sched, cfg.oracle_eta(&model)?)
}
