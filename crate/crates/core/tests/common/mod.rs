//! Independent reference computations shared by the integration tests.
//! Nothing here calls the library's solvers.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spdq::linalg::Matrix;
use spdq::mdp::RewardModel;
use spdq::oracle::PrimalDualPoint;
use spdq::spdq::FeasibleSets;
use spdq::{MdpModel, SaTable};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dense MDP with deterministic rewards in `[0, sigma]`.
pub fn random_mdp<R: Rng>(rng: &mut R, ns: usize, na: usize) -> MdpModel {
    let alpha = rng.gen_range(0.5..0.95);
    let sigma = rng.gen_range(1.0..3.0);
    let transitions = (0..na)
        .map(|_| {
            let rows: Vec<Vec<f64>> = (0..ns)
                .map(|_| {
                    let w: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.01..1.0)).collect();
                    let t: f64 = w.iter().sum();
                    w.iter().map(|x| x / t).collect()
                })
                .collect();
            Matrix::from_rows(&rows).unwrap()
        })
        .collect();
    let rewards = SaTable::from_stacked(
        ns,
        na,
        (0..ns * na).map(|_| rng.gen_range(0.0..sigma)).collect(),
    )
    .unwrap();
    MdpModel::new(transitions, RewardModel::Deterministic(rewards), alpha, sigma).unwrap()
}

/// Value of a deterministic policy by fixed-point iteration.
pub fn policy_value(model: &MdpModel, actions: &[usize]) -> Vec<f64> {
    let ns = model.n_states();
    let r = model.expected_rewards();
    let mut v = vec![0.0; ns];
    loop {
        let next: Vec<f64> = (0..ns)
            .map(|s| {
                let a = actions[s];
                let p = model.transition(a).row(s);
                r.get(s, a) + model.discount() * p.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>()
            })
            .collect();
        let diff = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if diff < 1e-14 {
            return v;
        }
    }
}

/// Best deterministic policy by enumerating all `|A|^|S|` of them:
/// returns the elementwise-best value and the maximum of `eta^T V^pi`.
pub fn brute_force(model: &MdpModel, eta: &[f64]) -> (Vec<f64>, f64) {
    let (ns, na) = (model.n_states(), model.n_actions());
    let total = na.pow(ns as u32);
    let mut best = vec![f64::NEG_INFINITY; ns];
    let mut best_obj = f64::NEG_INFINITY;
    for code in 0..total {
        let mut c = code;
        let actions: Vec<usize> = (0..ns)
            .map(|_| {
                let a = c % na;
                c /= na;
                a
            })
            .collect();
        let v = policy_value(model, &actions);
        for s in 0..ns {
            best[s] = best[s].max(v[s]);
        }
        best_obj = best_obj.max(eta.iter().zip(&v).map(|(a, b)| a * b).sum());
    }
    (best, best_obj)
}

/// Random measure with every entry at least `floor`.
pub fn random_measure<R: Rng>(rng: &mut R, ns: usize, na: usize, floor: f64) -> SaTable {
    let n = ns * na;
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let t: f64 = w.iter().sum();
    let free = 1.0 - floor * n as f64;
    SaTable::from_stacked(ns, na, w.iter().map(|x| floor + free * x / t).collect()).unwrap()
}

/// Random point inside the feasible sets, with `lambda` rows meeting their
/// `eta` floors by construction.
pub fn random_feasible_point<R: Rng>(rng: &mut R, sets: &FeasibleSets) -> PrimalDualPoint {
    let (ns, na) = (sets.n_states(), sets.n_actions());
    let vc = sets.value_cap();
    let q = SaTable::from_stacked(ns, na, (0..ns * na).map(|_| rng.gen_range(0.0..=vc)).collect()).unwrap();
    let v = (0..ns).map(|_| rng.gen_range(0.0..=vc)).collect();
    let mut lam = SaTable::zeros(ns, na);
    for s in 0..ns {
        let lo = sets.eta()[s];
        let hi = (na as f64 * sets.lambda_cap()).min(lo * 4.0);
        let target = rng.gen_range(lo..=hi);
        let w: Vec<f64> = (0..na).map(|_| rng.gen_range(0.0..1.0)).collect();
        let t: f64 = w.iter().sum();
        let mut row: Vec<f64> = w.iter().map(|x| target * x / t).collect();
        // push overflow above the cap onto the other entries
        for _ in 0..na {
            let excess: f64 = row.iter().map(|x| (x - sets.lambda_cap()).max(0.0)).sum();
            if excess <= 0.0 {
                break;
            }
            let room: Vec<usize> = (0..na).filter(|&a| row[a] < sets.lambda_cap()).collect();
            for x in row.iter_mut() {
                *x = x.min(sets.lambda_cap());
            }
            for &a in &room {
                row[a] += excess / room.len() as f64;
            }
        }
        lam.set_state_row(s, &row);
    }
    let mc = sets.mu_cap();
    let mu = SaTable::from_stacked(ns, na, (0..ns * na).map(|_| rng.gen_range(0.0..=mc)).collect()).unwrap();
    PrimalDualPoint { q, v, lam, mu }
}
