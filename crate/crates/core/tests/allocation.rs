use mlbq::allocation::{
    integerize_allocation, kernel_smoothness, mlbq_allocation, mlmc_allocation, realized_cost, AllocationInput, Objective,
};
use mlbq::kernels::{Kernel, Smoothness};
use mlbq::Error;
use mlbq_oracles::lattice::best_allocation;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const V: [f64; 3] = [1.305e-3, 0.088e-3, 0.002e-3];
const NORMS: [f64; 3] = [62.5e-3, 22.5e-3, 3.125e-3];
const C: [f64; 3] = [3.6e-3, 8.5e-3, 42.4e-3];

fn within(got: &[usize], want: &[usize], tol: usize) -> bool {
    got.iter().zip(want).all(|(&g, &w)| g.abs_diff(w) <= tol)
}

#[test]
fn poisson_mlmc_smallest_budget() {
    let p = mlmc_allocation(&AllocationInput::mlmc(V.to_vec(), C.to_vec(), 0.376).unwrap()).unwrap();
    assert!(within(&p.counts, &[67, 11, 1], 2), "{:?}", p.counts);
}

#[test]
fn poisson_mlbq_smallest_budget() {
    let inp = AllocationInput::mlbq(NORMS.to_vec(), C.to_vec(), 0.376, 1.0, 1, 1.0).unwrap();
    let p = mlbq_allocation(&inp).unwrap();
    let want = [38.8, 15.2, 2.5];
    for (r, w) in p.real.iter().zip(want) {
        assert!((r - w).abs() < 0.1, "{:?}", p.real);
    }
    assert_eq!(p.counts, vec![38, 15, 3]);
}

#[test]
fn integerize_reproduces_published_rounding() {
    let obj = Objective { weights: NORMS.to_vec(), power: 1.0 };
    assert_eq!(integerize_allocation(&[38.8, 15.2, 2.5], &C, 0.376, &obj).unwrap(), vec![38, 15, 3]);
}

#[test]
fn trivial_allocations() {
    let p = mlmc_allocation(&AllocationInput::mlmc(vec![1.0; 3], vec![1.0; 3], 3.0).unwrap()).unwrap();
    assert_eq!(p.counts, vec![1, 1, 1]);

    let inp = AllocationInput::<f64>::mlbq(vec![0.3], vec![0.25], 10.0, 1.5, 1, 2.0).unwrap();
    let p = mlbq_allocation(&inp).unwrap();
    assert!((p.real[0] - 20.0).abs() < 1e-12);

    let obj = Objective { weights: vec![1.0, 1.0], power: 1.0 };
    assert_eq!(integerize_allocation(&[3.0, 4.0], &[1.0, 2.0], 11.0, &obj).unwrap(), vec![3, 4]);
    assert_eq!(integerize_allocation(&[0.4, 0.4], &[1.0, 1.0], 2.0, &obj).unwrap(), vec![1, 1]);
}

#[test]
fn rejects_bad_inputs() {
    assert!(AllocationInput::mlmc(vec![1.0, 0.0], vec![1.0, 1.0], 1.0).is_err());
    assert!(AllocationInput::mlmc(vec![1.0], vec![1.0, 1.0], 1.0).is_err());
    assert!(AllocationInput::mlmc(vec![1.0], vec![1.0], -1.0).is_err());
    assert!(AllocationInput::mlbq(vec![1.0], vec![1.0], 1.0, 0.5, 1, 1.0).is_err());
    assert!(AllocationInput::mlbq(vec![1.0], vec![1.0], 1.0, 1.0, 1, 0.5).is_err());
    let obj = Objective { weights: vec![1.0, 1.0], power: 1.0 };
    assert!(matches!(integerize_allocation(&[1.0, 1.0], &[1.0, 1.0], 1.5, &obj), Err(Error::BudgetTooSmall { .. })));
}

#[test]
fn smoothness_from_kernel() {
    let k = Kernel::<f64>::matern(Smoothness::Half, 1, 1.0, 1.0).unwrap();
    assert_eq!(kernel_smoothness(&k).unwrap(), 1.0);
    let k = Kernel::<f64>::matern(Smoothness::FiveHalves, 2, 1.0, 1.0).unwrap();
    assert_eq!(kernel_smoothness(&k).unwrap(), 3.5);
    assert_eq!(kernel_smoothness(&Kernel::<f64>::brownian_motion(1.0).unwrap()).unwrap(), 1.0);
    assert!(kernel_smoothness(&Kernel::<f64>::squared_exponential(1, 1.0, 1.0).unwrap()).is_err());
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..5).prop_flat_map(|l| {
        (prop::collection::vec(1e-4f64..10.0, l), prop::collection::vec(1e-3f64..5.0, l), 1.0f64..1e3)
    })
    .prop_map(|(w, c, k)| {
        let t = k * c.iter().sum::<f64>();
        (w, c, t)
    })
}

proptest! {
    #[test]
    fn mlmc_scale_invariance((v, c, t) in instance(), k in 1e-3f64..1e3) {
        let base = mlmc_allocation(&AllocationInput::mlmc(v.clone(), c.clone(), t).unwrap()).unwrap();
        let vs: Vec<f64> = v.iter().map(|x| x * k).collect();
        let scaled_v = mlmc_allocation(&AllocationInput::mlmc(vs, c.clone(), t).unwrap()).unwrap();
        let k = k.min(1.0 / k);
        let cs: Vec<f64> = c.iter().map(|x| x * k).collect();
        let scaled_c = mlmc_allocation(&AllocationInput::mlmc(v, cs, t).unwrap()).unwrap();
        for l in 0..base.real.len() {
            prop_assert!((scaled_v.real[l] - base.real[l]).abs() <= 1e-10 * base.real[l]);
            prop_assert!((scaled_c.real[l] * k - base.real[l]).abs() <= 1e-10 * base.real[l]);
        }
    }

    #[test]
    fn mlbq_budget_and_stationarity((w, c, t) in instance(), tau in 0.6f64..4.0, gamma in 1.0f64..3.0, dim in 1usize..3) {
        let tau = tau.max(dim as f64 / 2.0 + 0.1);
        let t = t * gamma;
        let inp = AllocationInput::mlbq(w.clone(), c.clone(), t, tau, dim, gamma).unwrap();
        let p = mlbq_allocation(&inp).unwrap();
        let spent = gamma * c.iter().zip(&p.real).map(|(c, n)| c * n).sum::<f64>();
        prop_assert!((spent - t).abs() <= 1e-10 * t);
        let r = tau / dim as f64;
        let kkt: Vec<f64> = (0..w.len()).map(|l| r * w[l] * p.real[l].powf(-r - 1.0) / (gamma * c[l])).collect();
        for x in &kkt {
            prop_assert!((x - kkt[0]).abs() <= 1e-8 * kkt[0]);
        }
    }

    #[test]
    fn integer_plans_respect_budget((v, c, t) in instance()) {
        prop_assume!(c.iter().sum::<f64>() <= t);
        let p = mlmc_allocation(&AllocationInput::mlmc(v, c.clone(), t).unwrap()).unwrap();
        let maxc = c.iter().copied().fold(0.0, f64::max);
        prop_assert!(p.counts.iter().all(|&n| n >= 1));
        prop_assert!(p.realized_cost <= t + maxc + 1e-9 * t);
        prop_assert_eq!(p.realized_cost, realized_cost(&p.counts, &c));
    }

    #[test]
    fn integerize_is_deterministic_on_integers(n in prop::collection::vec(1usize..50, 1..5), c in prop::collection::vec(0.1f64..2.0, 4)) {
        let c = &c[..n.len()];
        let real: Vec<f64> = n.iter().map(|&x| x as f64).collect();
        let t = realized_cost(&n, c);
        let obj = Objective { weights: vec![1.0; n.len()], power: 1.0 };
        prop_assert_eq!(integerize_allocation(&real, c, t, &obj).unwrap(), n);
    }
}

#[test]
fn real_mlbq_solution_beats_random_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let l = rng.random_range(2..5);
        let w: Vec<f64> = (0..l).map(|_| rng.random_range(1e-3..1.0)).collect();
        let c: Vec<f64> = (0..l).map(|_| rng.random_range(1e-3..1.0)).collect();
        let t = rng.random_range(1.0..100.0) * c.iter().sum::<f64>();
        let tau = rng.random_range(0.6..3.0);
        let p = mlbq_allocation(&AllocationInput::mlbq(w.clone(), c.clone(), t, tau, 1, 1.0).unwrap()).unwrap();
        let obj = Objective { weights: w, power: tau };
        let best = obj.eval(&p.real);
        for _ in 0..10_000 {
            // random point on the budget simplex
            let raw: Vec<f64> = (0..l).map(|_| -rng.random::<f64>().ln()).collect();
            let s: f64 = raw.iter().sum();
            let n: Vec<f64> = raw.iter().zip(&c).map(|(r, c)| t * r / s / c).collect();
            assert!(best <= obj.eval(&n) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn real_mlmc_solution_beats_perturbations() {
    let p = mlmc_allocation(&AllocationInput::mlmc(V.to_vec(), C.to_vec(), 1.0).unwrap()).unwrap();
    let obj = Objective { weights: V.to_vec(), power: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let mut n: Vec<f64> = p.real.iter().map(|x| x * rng.random_range(0.8..1.2)).collect();
        let spent: f64 = n.iter().zip(&C).map(|(n, c)| n * c).sum();
        n.iter_mut().for_each(|x| *x /= spent);
        assert!(p.real_objective <= obj.eval(&n) * (1.0 + 1e-12));
    }
}

fn lattice_gap(weights: Vec<f64>, power: f64, costs: Vec<f64>, budget: f64, greedy: &[usize]) -> Option<f64> {
    let (_, best) = best_allocation(&weights, power, &costs, budget, 60)?;
    let obj = Objective { weights, power };
    Some(obj.eval_counts(greedy) / best)
}

#[test]
fn greedy_mlbq_matches_lattice_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut checked = 0;
    while checked < 200 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0)).collect();
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
        let t = rng.random_range(2.0..12.0);
        let tau = rng.random_range(0.6..3.0);
        let Ok(inp) = AllocationInput::mlbq(w.clone(), c.clone(), t, tau, 1, 1.0) else { continue };
        let Ok(p) = mlbq_allocation(&inp) else { continue };
        let Some((opt, _)) = best_allocation(&w, tau, &c, t, 60) else { continue };
        if opt.iter().any(|&n| n > 20) {
            continue;
        }
        let gap = lattice_gap(w, tau, c, t, &p.counts).unwrap();
        assert!(gap <= 1.02, "greedy {:?} vs lattice {opt:?}: ratio {gap}", p.counts);
        checked += 1;
    }
}

#[test]
fn greedy_mlmc_matches_lattice_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    while checked < 200 {
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0)).collect();
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
        let t = rng.random_range(2.0..8.0);
        let Ok(p) = mlmc_allocation(&AllocationInput::mlmc(v.clone(), c.clone(), t).unwrap()) else { continue };
        let Some(gap) = lattice_gap(v, 1.0, c, t, &p.counts) else { continue };
        assert!(gap <= 1.05, "ratio {gap}");
        checked += 1;
    }
}
