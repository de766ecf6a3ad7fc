mod common;

use proptest::prelude::*;
use serde::Deserialize;
use spdq::mdp::two_state_mdp;
use spdq::oracle::PrimalDualPoint;
use spdq::spdq::{
    project_lambda, run, spdq_step, stochastic_gradient, FeasibleSets, IterateState, RecordedStream,
    RunConfig, RunningAverages, StepSchedule, Transition, UniformSample,
};
use spdq::SaTable;

#[derive(Deserialize)]
struct Tables {
    q: Vec<Vec<f64>>,
    v: Vec<f64>,
    lam: Vec<Vec<f64>>,
    mu: Vec<Vec<f64>>,
}

impl Tables {
    fn point(&self) -> PrimalDualPoint {
        PrimalDualPoint {
            q: SaTable::from_state_rows(&self.q).unwrap(),
            v: self.v.clone(),
            lam: SaTable::from_state_rows(&self.lam).unwrap(),
            mu: SaTable::from_state_rows(&self.mu).unwrap(),
        }
    }
}

#[derive(Deserialize)]
struct SingleStep {
    start: Tables,
    expected: Tables,
}

#[test]
fn single_step_matches_golden_trace() {
    let golden: SingleStep = toml::from_str(include_str!("data/single_step.toml")).unwrap();
    let model = two_state_mdp();
    let sets = FeasibleSets::for_model(&model, vec![1.5, 1.5], 0.0856).unwrap();
    let mut x = IterateState::from_point(golden.start.point(), 0);
    let env = Transition {
        state: 0,
        action: 0,
        next_state: 1,
        reward: 3.0,
    };
    spdq_step(&mut x, &env, UniformSample { state: 1, action: 1 }, 1.0, &sets).unwrap();
    let want = golden.expected.point();
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    assert!(close(x.q.as_slice(), want.q.as_slice()), "{:?}", x.q.to_state_rows());
    assert!(close(&x.v, &want.v), "{:?}", x.v);
    assert!(close(x.lam.as_slice(), want.lam.as_slice()), "{:?}", x.lam.to_state_rows());
    assert!(close(x.mu.as_slice(), want.mu.as_slice()), "{:?}", x.mu.to_state_rows());
    assert_eq!(x.k, 1);
}

#[test]
fn interior_step_moves_by_the_sampled_gradient() {
    let model = two_state_mdp();
    let sets = FeasibleSets::for_model(&model, vec![1.5, 1.5], 0.0856).unwrap();
    let start = IterateState::from_point(
        PrimalDualPoint {
            q: SaTable::from_state_rows(&[vec![10.0, 9.0], vec![8.0, 7.0]]).unwrap(),
            v: vec![12.0, 11.0],
            lam: SaTable::from_state_rows(&[vec![1.0, 2.0], vec![1.5, 1.0]]).unwrap(),
            mu: SaTable::from_state_rows(&[vec![20.0, 5.0], vec![3.0, 40.0]]).unwrap(),
        },
        0,
    );
    let env = Transition { state: 1, action: 0, next_state: 0, reward: 1.0 };
    let uni = UniformSample { state: 0, action: 1 };
    let g = stochastic_gradient(&start, &env, uni, &sets);
    let gamma = 1e-3;
    let mut x = start.clone();
    spdq_step(&mut x, &env, uni, gamma, &sets).unwrap();
    let mut want = start.clone();
    for (i, d) in g.q {
        want.q.as_mut_slice()[i] -= gamma * d;
    }
    for (i, d) in g.v {
        want.v[i] -= gamma * d;
    }
    want.lam.as_mut_slice()[g.lam.0] += gamma * g.lam.1;
    want.mu.as_mut_slice()[g.mu.0] += gamma * g.mu.1;
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    assert!(close(x.q.as_slice(), want.q.as_slice()));
    assert!(close(&x.v, &want.v));
    assert!(close(x.lam.as_slice(), want.lam.as_slice()));
    assert!(close(x.mu.as_slice(), want.mu.as_slice()));
}

#[test]
fn averages_equal_the_batch_mean() {
    let model = two_state_mdp();
    let sets = FeasibleSets::for_model(&model, vec![1.5, 1.5], 0.0856).unwrap();
    let mut rng = common::rng(4);
    let mut avg = RunningAverages::new(2, 2, false);
    let mut seen = Vec::new();
    for _ in 0..37 {
        let x = IterateState::initialize(&sets, &mut rng).unwrap();
        avg.push(&x, None).unwrap();
        seen.push(x);
    }
    let n = seen.len() as f64;
    for i in 0..4 {
        let sum: f64 = seen.iter().map(|x| x.q.as_slice()[i]).sum();
        assert_eq!(avg.q_bar().as_slice()[i], sum / n);
        let sum: f64 = seen.iter().map(|x| x.lam.as_slice()[i]).sum();
        assert_eq!(avg.lam_bar().as_slice()[i], sum / n);
    }
    for s in 0..2 {
        let sum: f64 = seen.iter().map(|x| x.v[s]).sum();
        assert_eq!(avg.v_bar()[s], sum / n);
    }
    assert_eq!(avg.count(), 37);
}

#[test]
fn one_step_run_averages_the_initial_iterate() {
    let model = two_state_mdp();
    let sets = FeasibleSets::for_model(&model, vec![1.5, 1.5], 0.0856).unwrap();
    let mut stream = RecordedStream::new(vec![Transition { state: 0, action: 1, next_state: 1, reward: 2.0 }]);
    let config = RunConfig { iterations: 1, steps: StepSchedule::new(1.0).unwrap(), checkpoints: vec![1] };
    let mut rng = common::rng(9);
    let initial = IterateState::initialize(&sets, &mut common::rng(9)).unwrap();
    let out = run(&mut stream, &sets, &config, None, &mut rng, &mut |_| Ok(())).unwrap();
    assert_eq!(out.averages.q_bar(), initial.q);
    assert_eq!(out.averages.v_bar(), initial.v);
    assert_eq!(out.averages.lam_bar(), initial.lam);
}

fn lambda_case() -> impl Strategy<Value = (Vec<f64>, f64, f64)> {
    (1usize..=16, 0.1f64..5.0).prop_flat_map(|(n, cap)| {
        (
            prop::collection::vec(-2.0 * cap..3.0 * cap, n),
            0.0f64..(n as f64 * cap),
            Just(cap),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// KKT: the output is `clamp(x + tau)` for one `tau >= 0`, and `tau > 0`
    /// only when the sum constraint is tight.
    #[test]
    fn lambda_projection_satisfies_kkt((x, eta, cap) in lambda_case()) {
        let y = project_lambda(&x, eta, cap).unwrap();
        let tol = 1e-9 * cap.max(1.0);
        let sum: f64 = y.iter().sum();
        prop_assert!(y.iter().all(|&v| v >= 0.0 && v <= cap));
        prop_assert!(sum >= eta - tol);
        let clamped: Vec<f64> = x.iter().map(|v| v.clamp(0.0, cap)).collect();
        if clamped.iter().sum::<f64>() >= eta {
            prop_assert_eq!(y, clamped);
        } else {
            prop_assert!((sum - eta).abs() <= tol);
            let taus: Vec<f64> = y.iter().zip(&x)
                .filter(|(v, _)| **v > tol && **v < cap - tol)
                .map(|(v, u)| v - u)
                .collect();
            if let Some(&tau) = taus.first() {
                prop_assert!(tau >= -tol);
                for t in &taus {
                    prop_assert!((t - tau).abs() <= 1e-7 * cap.max(1.0));
                }
                for (v, u) in y.iter().zip(&x) {
                    if *v <= tol {
                        prop_assert!(u + tau <= tol * 10.0);
                    }
                    if *v >= cap - tol {
                        prop_assert!(u + tau >= cap - tol * 10.0);
                    }
                }
            }
        }
    }

    /// Arbitrary in-range samples and step sizes never leave the sets.
    #[test]
    fn steps_stay_feasible(
        seed in any::<u64>(),
        steps in prop::collection::vec((0usize..3, 0usize..2, 0usize..3, 0.0f64..1.0, 0usize..3, 0usize..2, 0.0f64..50.0), 1..60),
    ) {
        let mut rng = common::rng(seed);
        let model = common::random_mdp(&mut rng, 3, 2);
        let eta = vec![0.4, 0.2, 0.7];
        let sets = FeasibleSets::for_model(&model, eta, 0.05).unwrap();
        let mut x = IterateState::initialize(&sets, &mut rng).unwrap();
        for (s, a, n, r, sh, ah, gamma) in steps {
            let env = Transition { state: s, action: a, next_state: n, reward: r * model.sigma() };
            spdq_step(&mut x, &env, UniformSample { state: sh, action: ah }, gamma, &sets).unwrap();
            prop_assert!(sets.check(&x).is_ok());
        }
    }
}
