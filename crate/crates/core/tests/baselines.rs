mod common;

use spdq::baselines::{
    deterministic_pd_run, deterministic_pd_step, q_learning_run, spd_rl_corrected_run, Correction,
};
use spdq::harness::{policy_error, rng_for, PolicyNorm, ENV_STREAM, LEARNER_STREAM};
use spdq::linalg::Matrix;
use spdq::mdp::{grid_world, two_state_mdp, RewardModel, StochasticPolicy};
use spdq::oracle::{duality_gap, solve_optimal, SaddleProblem};
use spdq::schedule::{two_state_schedule, DistributionSchedule, MeasureSchedule};
use spdq::spdq::{
    log_checkpoints, primal_policy, FeasibleSets, IterateState, RecordedStream, RunConfig,
    StepSchedule, TrajectorySampler, Transition,
};
use spdq::{MdpModel, SaTable};

fn config(iterations: usize, gamma0: f64) -> RunConfig {
    RunConfig {
        iterations,
        steps: StepSchedule::new(gamma0).unwrap(),
        checkpoints: log_checkpoints(iterations, 1),
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn single_state(alpha: f64, reward: RewardModel) -> MdpModel {
    let p = Matrix::from_rows(&[vec![1.0]]).unwrap();
    MdpModel::new(vec![p], reward, alpha, 1.0).unwrap()
}

#[test]
fn q_learning_on_a_single_state_converges_to_the_geometric_sum() {
    let model = single_state(0.5, RewardModel::Deterministic(SaTable::filled(1, 1, 0.8)));
    let sets = FeasibleSets::for_model(&model, vec![1.0], 1.0).unwrap();
    let n = 100_000;
    let t = Transition { state: 0, action: 0, next_state: 0, reward: 0.8 };
    let mut stream = RecordedStream::new(vec![t; n]);
    let out = q_learning_run(&mut stream, &sets, &config(n, 1.0), &mut |_, _| Ok(())).unwrap();
    assert!((out.q.get(0, 0) - 1.6).abs() < 1e-3, "{}", out.q.get(0, 0));
    assert_eq!(out.visit_counts.get(0, 0), n as f64);
}

#[test]
fn q_learning_without_discount_tracks_the_mean_reward() {
    let lo = SaTable::filled(1, 1, 0.2);
    let hi = SaTable::filled(1, 1, 0.6);
    let model = single_state(0.0, RewardModel::UniformInterval { lo, hi });
    let sets = FeasibleSets::for_model(&model, vec![1.0], 1.0).unwrap();
    let sched = DistributionSchedule::new(&model, StochasticPolicy::uniform(1, 1), vec![1.0], 0, None).unwrap();
    let mut source = TrajectorySampler::new(&model, &mut sched.clone(), rng_for(5, ENV_STREAM));
    let out = q_learning_run(&mut source, &sets, &config(100_000, 1.0), &mut |_, _| Ok(())).unwrap();
    assert!((out.q.get(0, 0) - 0.4).abs() < 1e-2, "{}", out.q.get(0, 0));
}

#[test]
fn q_learning_finds_the_two_state_policy() {
    let model = two_state_mdp();
    let sched = two_state_schedule(&model).unwrap();
    let problem = SaddleProblem::unscaled(&model, vec![1.5, 1.5]).unwrap();
    let sol = solve_optimal(&problem, 1e-12).unwrap();
    let sets = FeasibleSets::for_model(&model, vec![1.5, 1.5], sched.zeta()).unwrap();
    let mut hits = 0;
    for seed in 1..=10 {
        let mut source = TrajectorySampler::new(&model, &mut sched.clone(), rng_for(seed, ENV_STREAM));
        let out = q_learning_run(&mut source, &sets, &config(100_000, 1.0), &mut |_, _| Ok(())).unwrap();
        if primal_policy(&out.q).actions() == sol.pi_star.actions() {
            hits += 1;
        }
    }
    assert!(hits >= 9, "{hits}/10");
}

fn stationary_grid() -> (MdpModel, DistributionSchedule) {
    let model = grid_world(2, 2, (0.0, 0.2), (1.0, 1.2), 0.9).unwrap();
    let uniform = StochasticPolicy::uniform(4, 4);
    let v0 = vec![0.25; 4];
    let sched = DistributionSchedule::new(&model, uniform, v0, 0, None).unwrap();
    (model, sched)
}

#[test]
fn empirical_measure_approaches_the_uniform_grid_measure() {
    let (model, sched) = stationary_grid();
    let sets = FeasibleSets::for_model(&model, vec![0.25; 4], sched.zeta()).unwrap();
    let mut source = TrajectorySampler::new(&model, &mut sched.clone(), rng_for(3, ENV_STREAM));
    let (_, avg) = spd_rl_corrected_run(
        &mut source,
        &sets,
        &config(50_000, 1.0),
        &mut rng_for(3, LEARNER_STREAM),
        &mut |_, _| Ok(()),
    )
    .unwrap();
    assert_eq!(avg.measure().total(), 50_000);
    for &f in avg.measure().frequencies().as_slice() {
        assert!((f - 1.0 / 16.0).abs() < 0.01, "{f}");
    }
    for &m in sched.m_infinity().as_slice() {
        assert!((m - 1.0 / 16.0).abs() < 1e-12);
    }
}

#[test]
fn exact_correction_improves_the_value_learner_with_more_samples() {
    let model = two_state_mdp();
    let base = two_state_schedule(&model).unwrap();
    let v0 = base.stationary().to_vec();
    let sched = DistributionSchedule::new(&model, base.behavior().clone(), v0, 0, None).unwrap();
    let problem = SaddleProblem::unscaled(&model, vec![1.5, 1.5]).unwrap();
    let sol = solve_optimal(&problem, 1e-12).unwrap();
    let sets = FeasibleSets::for_model(&model, vec![1.5, 1.5], sched.zeta()).unwrap();
    let exact = Correction::Exact(sched.m_infinity().clone());
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for seed in 1..=10 {
        let mut source = TrajectorySampler::new(&model, &mut sched.clone(), rng_for(seed, ENV_STREAM));
        spd_rl_corrected_run(
            &mut source,
            &sets,
            &config(100_000, 1.0),
            &mut rng_for(seed, LEARNER_STREAM),
            &mut |k, avg| {
                let e = policy_error(&sol.pi_star, &avg.dual_policy(&exact), PolicyNorm::Inf);
                match k {
                    1000 => early.push(e),
                    100_000 => late.push(e),
                    _ => {}
                }
                Ok(())
            },
        )
        .unwrap();
    }
    let (early, late) = (median(early), median(late));
    assert!(late < early, "{early} -> {late}");
}

#[test]
fn deterministic_step_fixes_the_scaled_saddle_point() {
    let mut rng = common::rng(21);
    for _ in 0..20 {
        let model = common::random_mdp(&mut rng, 3, 2);
        let zeta = 0.5 / 6.0;
        let m = common::random_measure(&mut rng, 3, 2, zeta);
        let eta = vec![0.3, 0.4, 0.5];
        let problem = SaddleProblem::new(&model, eta.clone(), m.clone(), zeta).unwrap();
        let sol = solve_optimal(&problem, 1e-12).unwrap();
        let sets = FeasibleSets::for_model(&model, eta, zeta).unwrap();
        let x = sol.scaled_saddle_point();
        let y = deterministic_pd_step(&x, &problem, &m, 0.7, &sets).unwrap();
        let pairs = [
            (x.q.as_slice(), y.q.as_slice()),
            (&x.v[..], &y.v[..]),
            (x.lam.as_slice(), y.lam.as_slice()),
            (x.mu.as_slice(), y.mu.as_slice()),
        ];
        for (a, b) in pairs {
            for (u, w) in a.iter().zip(b) {
                assert!((u - w).abs() < 1e-9, "{u} vs {w}");
            }
        }
    }
}

#[test]
fn deterministic_iteration_drives_the_averaged_gap_down() {
    let model = two_state_mdp();
    let sched = two_state_schedule(&model).unwrap();
    let eta = vec![1.5, 1.5];
    let problem = SaddleProblem::unscaled(&model, eta.clone()).unwrap();
    let sol = solve_optimal(&problem, 1e-12).unwrap();
    let sets = FeasibleSets::for_model(&model, eta, sched.zeta()).unwrap();
    let start = IterateState::initialize(&sets, &mut rng_for(1, LEARNER_STREAM)).unwrap().point();
    let mut gaps = Vec::new();
    let mut measures = sched.clone();
    deterministic_pd_run(
        start,
        &problem,
        &mut measures as &mut dyn MeasureSchedule,
        &sets,
        &config(100_000, 1.0),
        &mut |k, avg, _| {
            gaps.push((k, duality_gap(&avg.point(), &sol, &problem)?.value()));
            Ok(())
        },
    )
    .unwrap();
    let at = |k: usize| gaps.iter().find(|g| g.0 == k).unwrap().1;
    assert!(at(100_000) < at(10_000) && at(10_000) < at(1000), "{gaps:?}");
    assert!(at(100_000) < 2.0, "{gaps:?}");
}
