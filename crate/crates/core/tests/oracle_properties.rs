mod common;

use proptest::prelude::*;
use spdq::oracle::{
    duality_gap, lagrangian_m, solution_bounds, solve_optimal, PrimalDualPoint, SaddleProblem,
};
use spdq::spdq::{analytic_gradients, FeasibleSets};

fn entry(x: &mut PrimalDualPoint, block: usize, i: usize) -> &mut f64 {
    let t = match block {
        0 => &mut x.q,
        1 => &mut x.lam,
        _ => &mut x.mu,
    };
    &mut t.as_mut_slice()[i]
}

fn shape() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..=5, 1usize..=4, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn optimal_value_matches_its_own_policy((ns, na, seed) in shape()) {
        let mut rng = common::rng(seed);
        let model = common::random_mdp(&mut rng, ns, na);
        let problem = SaddleProblem::unscaled(&model, vec![1.0; ns]).unwrap();
        let sol = solve_optimal(&problem, 1e-12).unwrap();
        let v = common::policy_value(&model, sol.pi_star.actions());
        for s in 0..ns {
            prop_assert!((v[s] - sol.v_star[s]).abs() < 1e-9);
        }
    }

    /// At the saddle point the primal gradient and the equality residual
    /// vanish, and the inequality residual is nonpositive and complementary
    /// to `lambda*`.
    #[test]
    fn saddle_point_is_stationary((ns, na, seed) in shape()) {
        let mut rng = common::rng(seed);
        let model = common::random_mdp(&mut rng, ns, na);
        let zeta = 0.5 / (ns * na) as f64;
        let m = common::random_measure(&mut rng, ns, na, zeta);
        let eta: Vec<f64> = (0..ns).map(|i| 0.2 + 0.1 * i as f64).collect();
        let problem = SaddleProblem::new(&model, eta, m.clone(), zeta).unwrap();
        let sol = solve_optimal(&problem, 1e-12).unwrap();
        let g = analytic_gradients(&sol.scaled_saddle_point(), &problem, &m).unwrap();
        for x in g.q.as_slice().iter().chain(&g.v).chain(g.mu.as_slice()) {
            prop_assert!(x.abs() < 1e-8, "nonzero gradient entry {x}");
        }
        for (r, l) in g.lam.as_slice().iter().zip(sol.lambda_star.as_slice()) {
            prop_assert!(*r < 1e-8);
            prop_assert!((r * l).abs() < 1e-8);
        }
        solution_bounds(&problem, &sol).unwrap();
    }

    #[test]
    fn lagrangian_gradient_matches_central_differences((ns, na, seed) in shape()) {
        let mut rng = common::rng(seed);
        let model = common::random_mdp(&mut rng, ns, na);
        let zeta = 0.5 / (ns * na) as f64;
        let m = common::random_measure(&mut rng, ns, na, zeta);
        let eta = vec![0.5; ns];
        let problem = SaddleProblem::new(&model, eta.clone(), m.clone(), zeta).unwrap();
        let sets = FeasibleSets::for_model(&model, eta, zeta).unwrap();
        let p = common::random_feasible_point(&mut rng, &sets);
        let g = analytic_gradients(&p, &problem, &m).unwrap();
        let h = 1e-5;
        let f = |x: &PrimalDualPoint| lagrangian_m(x, &problem, &m).unwrap();
        let check = |fd: f64, exact: f64| (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0);

        for i in 0..ns * na {
            for (block, exact) in [(0, &g.q), (1, &g.lam), (2, &g.mu)] {
                let mut up = p.clone();
                let mut down = p.clone();
                *entry(&mut up, block, i) += h;
                *entry(&mut down, block, i) -= h;
                let fd = (f(&up) - f(&down)) / (2.0 * h);
                prop_assert!(check(fd, exact.as_slice()[i]), "block {block} entry {i}: {fd} vs {}", exact.as_slice()[i]);
            }
        }
        for s in 0..ns {
            let mut up = p.clone();
            let mut down = p.clone();
            up.v[s] += h;
            down.v[s] -= h;
            let fd = (f(&up) - f(&down)) / (2.0 * h);
            prop_assert!(check(fd, g.v[s]));
        }
    }

    #[test]
    fn gap_identity_at_feasible_points((ns, na, seed) in shape()) {
        let mut rng = common::rng(seed);
        let model = common::random_mdp(&mut rng, ns, na);
        let eta: Vec<f64> = (0..ns).map(|i| 0.3 + 0.05 * i as f64).collect();
        let problem = SaddleProblem::unscaled(&model, eta.clone()).unwrap();
        let sol = solve_optimal(&problem, 1e-12).unwrap();
        let sets = FeasibleSets::for_model(&model, eta, 1.0).unwrap();
        let p = common::random_feasible_point(&mut rng, &sets);
        let r = duality_gap(&p, &sol, &problem).unwrap();
        prop_assert!((r.direct - r.occupancy_form).abs() <= 1e-8);
        prop_assert!(r.direct >= -1e-8);
        // the gap vanishes at the saddle point itself
        let at_star = duality_gap(&sol.saddle_point(), &sol, &problem).unwrap();
        prop_assert!(at_star.direct.abs() < 1e-8);
    }
}
