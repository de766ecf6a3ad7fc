mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use spdq::linalg::Matrix;
use spdq::mdp::StochasticPolicy;
use spdq::schedule::{
    mixing_threshold_kstar, second_eigenvalue_modulus, DistributionSchedule, ExplicitSchedule,
    MeasureSchedule,
};
use spdq::SaTable;

fn random_schedule(seed: u64, ns: usize, na: usize) -> (spdq::MdpModel, DistributionSchedule) {
    let mut rng = common::rng(seed);
    let model = common::random_mdp(&mut rng, ns, na);
    let weights: Vec<Vec<f64>> = (0..ns)
        .map(|_| (0..na).map(|_| rng.gen_range(0.1..1.0)).collect())
        .collect();
    let behavior = StochasticPolicy::from_weights(&weights).unwrap();
    let w: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.0..1.0)).collect();
    let t: f64 = w.iter().sum();
    let v0 = w.iter().map(|x| x / t).collect();
    let sched = DistributionSchedule::new(&model, behavior, v0, 0, None).unwrap();
    (model, sched)
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// Coefficients `c[0..=n]` of `det(z I - A)` by Faddeev-LeVerrier, `c[n] = 1`.
fn char_poly(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mat_mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += c[n - k + 1];
        }
        m = next;
        let am = mat_mul(a, &m);
        let trace: f64 = (0..n).map(|i| am[i][i]).sum();
        c[n - k] = -trace / k as f64;
    }
    c
}

fn durand_kerner(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let eval = |z: Complex64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..2000 {
        let prev = roots.clone();
        for i in 0..n {
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
        }
        if roots.iter().zip(&prev).all(|(a, b)| (a - b).norm() < 1e-15) {
            break;
        }
    }
    roots
}

#[test]
fn char_poly_oracle_on_a_known_matrix() {
    // eigenvalues 1, 0.5, -0.2
    let roots = durand_kerner(&char_poly(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, 0.5, 0.0],
        vec![0.0, 0.0, -0.2],
    ]));
    let mut mods: Vec<f64> = roots.iter().map(|z| z.re).collect();
    mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((mods[0] + 0.2).abs() < 1e-12 && (mods[1] - 0.5).abs() < 1e-12 && (mods[2] - 1.0).abs() < 1e-12);
}

#[test]
fn explicit_schedule_repeats_its_last_table() {
    let a = SaTable::filled(1, 2, 0.5);
    let b = SaTable::from_stacked(1, 2, vec![0.3, 0.7]).unwrap();
    let mut s = ExplicitSchedule::new(vec![a.clone(), b.clone()]).unwrap();
    assert_eq!(s.measure_at(0), a);
    assert_eq!(s.measure_at(1), b);
    assert_eq!(s.measure_at(50), b);
    assert!((s.zeta() - 0.3).abs() < 1e-15);
    assert!(ExplicitSchedule::new(vec![SaTable::filled(1, 2, 0.4)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_distributions_match_dense_powers(seed in any::<u64>(), ns in 1usize..=5, na in 1usize..=3) {
        let (_, mut sched) = random_schedule(seed, ns, na);
        let p = sched.behavior_transitions().to_rows();
        let v0 = sched.v0().to_vec();
        let mut power: Vec<Vec<f64>> = (0..ns).map(|i| (0..ns).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        for k in 0..40 {
            let want: Vec<f64> = (0..ns).map(|j| (0..ns).map(|i| v0[i] * power[i][j]).sum()).collect();
            let got = sched.state_distribution_at(k);
            for j in 0..ns {
                prop_assert!((want[j] - got[j]).abs() < 1e-12);
            }
            let m = sched.m_matrix_at(k);
            prop_assert!(m.as_slice().iter().all(|&x| x >= sched.zeta() * (1.0 - 1e-12)));
            power = mat_mul(&power, &p);
        }
    }

    #[test]
    fn second_eigenvalue_matches_characteristic_roots(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = common::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
                let t: f64 = w.iter().sum();
                w.iter().map(|x| x / t).collect()
            })
            .collect();
        let roots = durand_kerner(&char_poly(&rows));
        let one = roots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.0).norm().partial_cmp(&(b.1 - 1.0).norm()).unwrap())
            .unwrap()
            .0;
        let expected = roots
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != one)
            .map(|(_, z)| z.norm())
            .fold(0.0f64, f64::max);
        let got = second_eigenvalue_modulus(&Matrix::from_rows(&rows).unwrap()).unwrap();
        prop_assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn kstar_threshold_holds_for_the_next_thousand_steps(l2 in 1e-6f64..0.995) {
        let k0 = mixing_threshold_kstar(l2).unwrap();
        for k in k0..=k0 + 1000 {
            prop_assert!(l2.powf(k as f64) <= 1.0 / (k as f64 + 1.0));
        }
    }

    #[test]
    fn beta_bounds_the_inverse_measure_drift(seed in any::<u64>(), ns in 1usize..=4, na in 1usize..=3) {
        let (_, mut sched) = random_schedule(seed, ns, na);
        for k in 0..100 {
            sched.beta_at_checked(k).unwrap();
        }
    }
}
