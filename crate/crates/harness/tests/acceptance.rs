//! One test per acceptance criterion. Each prints a single PASS or FAIL line
//! to stderr (visible without `--nocapture`) before asserting.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mlbq::allocation::{mlbq_allocation, mlmc_allocation, AllocationInput, Objective};
use mlbq::designs::{derive_seed, generate_design, DesignKind};
use mlbq::gp::{fit_gp, PriorMean, DEFAULT_NUGGET};
use mlbq::kernels::{Kernel, ProductMeasure, Smoothness};
use mlbq::linalg::Matrix;
use mlbq::models::{brownian_rkhs_increment_norm, MultifidelityModel, PiecewiseLinearFunction, Poisson, PoissonConfig};
use mlbq::quadrature::{bq_posterior, mlbq_estimate, sk_mlbq_estimate, LevelData};
use mlbq::PointSet;
use mlbq_harness::calibration::calibration_table;
use mlbq_harness::engine::run_experiment;
use mlbq_harness::oracle;
use mlbq_harness::{ExperimentConfig, ResultRecord};
use mlbq_oracles::{lattice, stats};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const V: [f64; 3] = [1.305e-3, 0.088e-3, 0.002e-3];
const NORMS: [f64; 3] = [62.5e-3, 22.5e-3, 3.125e-3];
const C: [f64; 3] = [3.6e-3, 8.5e-3, 42.4e-3];
const BUDGETS: [f64; 3] = [0.376, 0.751, 1.503];

fn verdict(criterion: usize, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    writeln!(std::io::stderr(), "{tag} criterion {criterion}: {detail}").unwrap();
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn allocate(rule: &str, magnitudes: &[f64]) -> (Vec<Vec<usize>>, Duration) {
    let t0 = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_mlbq"))
        .args(["allocate", "--rule", rule, "--magnitudes", &join(magnitudes), "--costs", &join(&C)])
        .args(["--budget", &join(&BUDGETS)])
        .output()
        .unwrap();
    let elapsed = t0.elapsed();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let plans: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let counts = plans
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["counts"].as_array().unwrap().iter().map(|n| n.as_u64().unwrap() as usize).collect())
        .collect();
    (counts, elapsed)
}

#[test]
fn criterion_1_allocation_tables() {
    let mlmc_table = [[67, 11, 1], [133, 23, 2], [266, 46, 3]];
    let mlbq_table = [[38, 15, 3], [77, 30, 5], [153, 60, 10]];
    let (mlmc, t1) = allocate("mlmc", &V);
    let (mlbq, t2) = allocate("mlbq", &NORMS);

    let mut misses = Vec::new();
    for (got, want, tol, rule) in [(&mlmc, &mlmc_table, 2, "mlmc"), (&mlbq, &mlbq_table, 1, "mlbq")] {
        for ((g, w), t) in got.iter().zip(want.iter()).zip(BUDGETS) {
            if g.iter().zip(w).any(|(&g, &w)| g.abs_diff(w) > tol) {
                misses.push(format!("{rule} T={t}: {g:?} vs {w:?} (±{tol})"));
            }
        }
    }
    let fast = t1 < Duration::from_secs(1) && t2 < Duration::from_secs(1);
    let pass = misses.is_empty() && fast;
    let detail = if misses.is_empty() {
        format!("all rows within tolerance ({:.0?}, {:.0?})", t1, t2)
    } else {
        format!("{} ({:.0?}, {:.0?})", misses.join("; "), t1, t2)
    };
    verdict(1, pass, &detail);
    assert!(pass, "{detail}");
}

fn mean_error(records: &[ResultRecord], label: &str, budget: f64) -> f64 {
    let e: Vec<f64> = records.iter().filter(|r| r.estimator == label && r.budget == budget).map(|r| r.abs_error).collect();
    assert!(!e.is_empty(), "no records for {label} at {budget}");
    e.iter().sum::<f64>() / e.len() as f64
}

#[test]
fn criterion_2_poisson_ordering() {
    let t0 = Instant::now();
    let mut cfg = ExperimentConfig::load(Path::new("configs/poisson.json")).unwrap();
    cfg.estimators.retain(|e| matches!(e.label(), "mlmc" | "mlbq-grid"));
    assert_eq!(cfg.replications, 100);
    let out = run_experiment(&cfg, None).unwrap();
    let elapsed = t0.elapsed();
    assert!(out.failures.is_empty(), "{:?}", out.failures);

    let mut parts = Vec::new();
    let mut pass = elapsed < Duration::from_secs(120);
    for t in BUDGETS {
        let (bq, mc) = (mean_error(&out.records, "mlbq-grid", t), mean_error(&out.records, "mlmc", t));
        pass &= bq * 5.0 <= mc;
        parts.push(format!("T={t}: mlbq {bq:.2e}, mlmc {mc:.2e}, ratio {:.1}", mc / bq));
    }
    let detail = format!("{} ({:.1?})", parts.join("; "), elapsed);
    verdict(2, pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_3_ode_budget_multiplier() {
    let t0 = Instant::now();
    let bq = ExperimentConfig::from_json(
        r#"{
      "schema_version": 1,
      "model": { "name": "ode" },
      "budgets": [1.517],
      "replications": 100,
      "seed": 20240603,
      "allocation": { "source": "table", "counts": [[830, 135, 15]] },
      "estimators": [
        { "estimator": "mlbq", "label": "mlbq-halton-se", "design": "halton",
          "kernel": { "family": "se", "policy": "fitted", "lo": 0.05, "hi": 20.0, "per_dimension": true } }
      ]
    }"#,
    )
    .unwrap();
    let mc = ExperimentConfig::from_json(
        r#"{
      "schema_version": 1,
      "model": { "name": "ode" },
      "budgets": [30.347],
      "replications": 100,
      "seed": 20240602,
      "allocation": { "source": "table", "counts": [[16579, 2701, 308]] },
      "estimators": [ { "estimator": "mlmc", "design": "iid" } ]
    }"#,
    )
    .unwrap();
    let bq_out = run_experiment(&bq, None).unwrap();
    let mc_out = run_experiment(&mc, None).unwrap();
    let elapsed = t0.elapsed();
    assert!(bq_out.failures.is_empty() && mc_out.failures.is_empty());

    let e_bq = mean_error(&bq_out.records, "mlbq-halton-se", 1.517);
    let e_mc = mean_error(&mc_out.records, "mlmc", 30.347);
    let pass = e_bq <= e_mc && elapsed < Duration::from_secs(600);
    let detail = format!("MLBQ at T=1.517 {e_bq:.3e} vs MLMC at T=30.347 {e_mc:.3e} ({elapsed:.1?})");
    verdict(3, pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_4_bq_convergence_rate() {
    let t0 = Instant::now();
    let unit = ProductMeasure::<f64>::unit_cube(1).unwrap();
    let k = Kernel::matern(Smoothness::Half, 1, 1.0, 1.0).unwrap();
    let truth = Poisson::<f64>::exact_integral();
    let ns = [8usize, 16, 32, 64, 128, 256];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let d = generate_design(DesignKind::Grid, &unit, n, 0).unwrap().points;
            let y: Vec<f64> = d.iter().map(|p| Poisson::<f64>::exact_solution(p[0])).collect();
            let fit = fit_gp(&k, &d, &y, &PriorMean::Zero, DEFAULT_NUGGET).unwrap();
            (bq_posterior(&fit, &unit).unwrap().mean - truth).abs()
        })
        .collect();
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let slope = stats::slope(&lx, &ly);
    let elapsed = t0.elapsed();
    let pass = slope <= -0.9 && elapsed < Duration::from_secs(10);
    let detail = format!("log-log slope {slope:.3} over n = 8..256 ({elapsed:.1?})");
    verdict(4, pass, &detail);
    assert!(pass, "{detail}");
}

fn gaussian_mc_checks() -> Vec<String> {
    let normal = ProductMeasure::<f64>::standard_normal(1).unwrap();
    let kernels = [
        Kernel::matern(Smoothness::FiveHalves, 1, 1.2, 1.0).unwrap(),
        Kernel::squared_exponential(1, 0.8, 1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut bad = Vec::new();
    for k in &kernels {
        let ys: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let y: f64 = StandardNormal.sample(&mut rng);
                k.eval(&[0.4], &[y]).unwrap()
            })
            .collect();
        let (m, se) = stats::mean_and_se(&ys);
        let got = k.kernel_mean(&normal, &[0.4]).unwrap();
        if (got - m).abs() > 4.0 * se {
            bad.push(format!("{k:?} Gaussian mean {got} vs MC {m} ± {se}"));
        }
        let pairs: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let (x, y): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                k.eval(&[x], &[y]).unwrap()
            })
            .collect();
        let (m, se) = stats::mean_and_se(&pairs);
        let got = k.initial_error(&normal).unwrap();
        if (got - m).abs() > 4.0 * se {
            bad.push(format!("{k:?} Gaussian initial error {got} vs MC {m} ± {se}"));
        }
    }
    bad
}

fn level(l: usize, xs: &[f64], ys: &[f64]) -> LevelData<f64> {
    LevelData::new(l, PointSet::from_scalars(xs).unwrap(), ys.to_vec(), 1.0).unwrap()
}

type LevelSpec = Vec<(Vec<f64>, Vec<f64>, f64)>;

fn any_levels() -> impl Strategy<Value = LevelSpec> {
    prop::collection::vec(
        (1usize..8).prop_flat_map(|n| {
            (prop::collection::vec(0.0f64..1.0, n), prop::collection::vec(-2.0f64..2.0, n), 0.05f64..2.0)
        }),
        1..4,
    )
}

fn sum_identity() -> Result<(), String> {
    let unit = ProductMeasure::<f64>::unit_cube(1).unwrap();
    let mut runner = TestRunner::new(Config::with_cases(64));
    runner
        .run(&any_levels(), |spec| {
            let levels: Vec<LevelData<f64>> = spec.iter().enumerate().map(|(l, (x, y, _))| level(l, x, y)).collect();
            let ks: Vec<Kernel<f64>> =
                spec.iter().map(|(_, _, g)| Kernel::matern(Smoothness::Half, 1, *g, 0.5 + *g).unwrap()).collect();
            let means = vec![PriorMean::Zero; levels.len()];
            let post = mlbq_estimate(&levels, &ks, &means, &unit, DEFAULT_NUGGET).unwrap();
            let mut m = 0.0;
            for (d, k) in levels.iter().zip(&ks) {
                let fit = fit_gp(k, d.design(), d.increments(), &PriorMean::Zero, DEFAULT_NUGGET).unwrap();
                m += bq_posterior(&fit, &unit).unwrap().mean;
            }
            prop_assert!((post.mean - m).abs() <= 1e-12 * m.abs().max(1e-300), "{} vs {}", post.mean, m);
            Ok(())
        })
        .map_err(|e| format!("MLBQ sum identity: {e}"))
}

fn sk_identity() -> Result<(), String> {
    let model = Poisson::<f64>::new(PoissonConfig::default()).unwrap();
    let levels: Vec<LevelData<f64>> = [20usize, 9, 4]
        .iter()
        .enumerate()
        .map(|(l, &n)| {
            let d = generate_design(DesignKind::Iid, model.measure(), n, derive_seed(77, &[l as u64])).unwrap();
            model.level_data(l, &d.points).unwrap()
        })
        .collect();
    let base = Kernel::matern(Smoothness::Half, 1, 0.4, 0.02).unwrap();
    let means = vec![PriorMean::Zero; 3];
    let sk = sk_mlbq_estimate(&levels, &base, &Matrix::identity(3), &means, model.measure(), DEFAULT_NUGGET).unwrap();
    let ml = mlbq_estimate(&levels, &vec![base; 3], &means, model.measure(), DEFAULT_NUGGET).unwrap();
    let ok = (sk.mean - ml.mean).abs() <= 1e-10 * ml.mean.abs() && (sk.variance - ml.variance).abs() <= 1e-10 * ml.variance;
    if ok {
        Ok(())
    } else {
        Err(format!("SK-MLBQ with B = I: {} ± {} vs {} ± {}", sk.mean, sk.variance, ml.mean, ml.variance))
    }
}

fn random_pl(rng: &mut ChaCha8Rng) -> PiecewiseLinearFunction<f64> {
    let mut knots: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
    knots.extend([0.0, 1.0]);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let values = knots.iter().map(|&k| if k == 0.0 { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
    PiecewiseLinearFunction::new(knots, values).unwrap()
}

fn brownian_norms() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..100 {
        let (g, h) = (random_pl(&mut rng), random_pl(&mut rng));
        let mut knots: Vec<f64> = g.knots().iter().chain(h.knots()).copied().collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        // ∫(g′ − h′)², exact segment by segment
        let sq: f64 = knots
            .windows(2)
            .map(|w| {
                let d = (g.eval(w[1]) - h.eval(w[1])) - (g.eval(w[0]) - h.eval(w[0]));
                d * d / (w[1] - w[0])
            })
            .sum();
        let got = brownian_rkhs_increment_norm(&g, &h).unwrap();
        if (got - sq.sqrt()).abs() > 1e-10 * sq.sqrt().max(1.0) {
            return Err(format!("Brownian norm {got} vs {}", sq.sqrt()));
        }
    }
    Ok(())
}

fn fem_nodes() -> Result<(), String> {
    let model = Poisson::<f64>::new(PoissonConfig::default()).unwrap();
    for (l, u) in model.solutions().iter().enumerate() {
        for &x in u.knots() {
            let err = (u.eval(x) - Poisson::<f64>::exact_solution(x)).abs();
            if err > 1e-10 {
                return Err(format!("FEM level {l} node {x}: error {err:e}"));
            }
        }
    }
    Ok(())
}

fn small_instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
    (prop::collection::vec(0.01f64..1.0, 3), prop::collection::vec(0.1f64..1.0, 3), 2.0f64..12.0, 0.6f64..3.0)
}

fn greedy_vs_lattice() -> Result<(), String> {
    let mut runner = TestRunner::new(Config::with_cases(128));
    runner
        .run(&small_instance(), |(w, c, t, tau)| {
            let Ok(p) = mlbq_allocation(&AllocationInput::mlbq(w.clone(), c.clone(), t, tau, 1, 1.0).unwrap()) else {
                return Ok(());
            };
            let Some((opt, best)) = lattice::best_allocation(&w, tau, &c, p.realized_cost, 60) else {
                return Ok(());
            };
            prop_assume!(opt.iter().all(|&n| n <= 20));
            let obj = Objective { weights: w, power: tau };
            let ratio = obj.eval_counts(&p.counts) / best;
            prop_assert!(ratio <= 1.02, "greedy {:?} vs lattice {:?}: {}", p.counts, opt, ratio);
            Ok(())
        })
        .map_err(|e| format!("greedy integerisation: {e}"))
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..5)
        .prop_flat_map(|l| (prop::collection::vec(1e-4f64..10.0, l), prop::collection::vec(1e-3f64..5.0, l), 1.0f64..1e3))
        .prop_map(|(w, c, k)| {
            let t = k * c.iter().sum::<f64>();
            (w, c, t)
        })
}

fn kkt() -> Result<(), String> {
    let mut runner = TestRunner::new(Config::with_cases(256));
    runner
        .run(&(instance(), 0.6f64..4.0, 1usize..3), |((w, c, t), tau, dim)| {
            let tau = tau.max(dim as f64 / 2.0 + 0.1);
            let p = mlbq_allocation(&AllocationInput::mlbq(w.clone(), c.clone(), t, tau, dim, 1.0).unwrap()).unwrap();
            let r = tau / dim as f64;
            let g: Vec<f64> = (0..w.len()).map(|l| r * w[l] * p.real[l].powf(-r - 1.0) / c[l]).collect();
            prop_assert!(g.iter().all(|x| (x - g[0]).abs() <= 1e-8 * g[0]), "MLBQ multipliers {:?}", g);

            let p = mlmc_allocation(&AllocationInput::mlmc(w.clone(), c.clone(), t).unwrap()).unwrap();
            let g: Vec<f64> = (0..w.len()).map(|l| w[l] / (p.real[l] * p.real[l] * c[l])).collect();
            prop_assert!(g.iter().all(|x| (x - g[0]).abs() <= 1e-8 * g[0]), "MLMC multipliers {:?}", g);
            Ok(())
        })
        .map_err(|e| format!("KKT stationarity: {e}"))
}

#[test]
fn criterion_5_oracle_suites() {
    let mut bad: Vec<String> =
        oracle::report().unwrap().into_iter().filter(|c| !c.passed()).map(|c| c.to_string()).collect();
    bad.extend(gaussian_mc_checks());
    for check in [sum_identity, sk_identity, brownian_norms, fem_nodes, greedy_vs_lattice, kkt] {
        if let Err(e) = check() {
            bad.push(e);
        }
    }
    let pass = bad.is_empty();
    let detail = if pass { "all oracle and property checks agree".to_owned() } else { bad.join("; ") };
    verdict(5, pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6_calibration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let synthetic: Vec<ResultRecord> = (0..5000)
        .map(|r| {
            let sd = 0.1 + (r % 7) as f64 * 0.3;
            let e: f64 = StandardNormal.sample(&mut rng);
            ResultRecord {
                replication: r,
                estimator: "synthetic".into(),
                budget: 1.0,
                estimate: e * sd,
                variance: Some(sd * sd),
                abs_error: (e * sd).abs(),
                cost: 1.0,
                n_per_level: vec![1],
            }
        })
        .collect();
    let rows = calibration_table(&synthetic, &[0.1, 0.5, 0.9, 0.99]).unwrap();
    let synthetic_ok = rows.iter().all(|r| (r.coverage - r.level).abs() <= 2.0 * r.std_error);

    let mut cfg = ExperimentConfig::load(Path::new("configs/poisson.json")).unwrap();
    cfg.estimators.retain(|e| e.label() == "mlbq-iid");
    let out = run_experiment(&cfg, None).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    let top = BUDGETS[2];
    let poisson: Vec<ResultRecord> = out.records.into_iter().filter(|r| r.budget == top).collect();
    let row = calibration_table(&poisson, &[0.9]).unwrap().remove(0);
    let poisson_ok = row.coverage >= 0.9;

    let pass = synthetic_ok && poisson_ok;
    let detail = format!(
        "synthetic within 2 SE: {synthetic_ok}; Poisson MLBQ (IID, T={top}) coverage at q=0.9 is {:.2} over {} runs",
        row.coverage, row.replications
    );
    verdict(6, pass, &detail);
    assert!(pass, "{detail}");
}
