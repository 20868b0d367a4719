//! Recomputes derived reference values with independent oracles.

use mlbq::allocation::{mlbq_allocation, realized_cost, AllocationInput, Objective};
use mlbq::designs::{fill_distance, generate_design, DesignKind};
use mlbq::gp::{fit_gp, PriorMean, DEFAULT_NUGGET};
use mlbq::kernels::{Kernel, ProductMeasure, Smoothness};
use mlbq::models::{brownian_rkhs_increment_norm, MultifidelityModel, PiecewiseLinearFunction, Poisson, PoissonConfig};
use mlbq::quadrature::{bq_posterior, mlbq_estimate, LevelData};
use mlbq::PointSet;
use mlbq_oracles::{lattice, quad, stats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    /// How the reference value was obtained.
    pub oracle: &'static str,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn deviation(&self) -> f64 {
        (self.value - self.reference).abs()
    }

    pub fn passed(&self) -> bool {
        self.deviation() <= self.tolerance
    }
}

impl std::fmt::Display for OracleCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {:.15e} vs {:.15e} ({}), |diff| {:.2e} <= {:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.reference,
            self.oracle,
            self.deviation(),
            self.tolerance
        )
    }
}

pub fn report() -> Result<Vec<OracleCheck>> {
    let unit = ProductMeasure::<f64>::unit_cube(1)?;
    let gauss = ProductMeasure::<f64>::standard_normal(1)?;
    let m12 = Kernel::matern(Smoothness::Half, 1, 0.7, 1.0)?;
    let m52 = Kernel::matern(Smoothness::FiveHalves, 1, 1.0, 1.0)?;
    let se = Kernel::squared_exponential(1, 0.8, 1.0)?;
    let k1 = |k: &Kernel<f64>, x: f64, y: f64| k.eval(&[x], &[y]).expect("1-D");
    let mut checks = Vec::new();

    checks.push(OracleCheck {
        name: "Matérn-1/2 uniform kernel mean at 0.3",
        oracle: "adaptive Gauss–Kronrod",
        value: m12.kernel_mean(&unit, &[0.3])?,
        reference: quad::integrate_pieces(|y| k1(&m12, 0.3, y), 0.0, 1.0, &[0.3], 1e-13),
        tolerance: 1e-8,
    });
    checks.push(OracleCheck {
        name: "Matérn-5/2 uniform initial error",
        oracle: "double Gauss–Kronrod split on the diagonal",
        value: m52.initial_error(&unit)?,
        reference: quad::integrate_square_diagonal(|x, y| k1(&m52, x, y), 0.0, 1.0, 0.0, 1.0, 1e-13),
        tolerance: 1e-8,
    });
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    checks.push(OracleCheck {
        name: "Matérn-5/2 Gaussian kernel mean at 0.4",
        oracle: "Gauss–Kronrod on the real line",
        value: m52.kernel_mean(&gauss, &[0.4])?,
        reference: quad::integrate_real_line(|y| k1(&m52, 0.4, y) * phi(y), &[0.4], 1e-13),
        tolerance: 1e-8,
    });
    checks.push(OracleCheck {
        name: "squared-exponential Gaussian initial error",
        oracle: "nested Gauss–Kronrod on the real line",
        value: se.initial_error(&gauss)?,
        reference: quad::integrate_real_line(
            |x| phi(x) * quad::integrate_real_line(|y| k1(&se, x, y) * phi(y), &[], 1e-14),
            &[],
            1e-12,
        ),
        tolerance: 1e-8,
    });

    let poisson = Poisson::<f64>::new(PoissonConfig::default())?;
    let worst_node = (1..4)
        .map(|i| {
            let x = i as f64 / 4.0;
            (poisson.eval_level(0, &[x]).expect("level 0") - Poisson::<f64>::exact_solution(x)).abs()
        })
        .fold(0.0, f64::max);
    checks.push(OracleCheck {
        name: "Poisson level-0 nodal error",
        oracle: "exact solution ½x(x − 1)",
        value: worst_node,
        reference: 0.0,
        tolerance: 1e-10,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ys: Vec<f64> =
        (0..200_000).map(|_| poisson.eval_level(2, &[rng.random::<f64>()]).expect("level 2")).collect();
    let (mc, se_mc) = stats::mean_and_se(&ys);
    checks.push(OracleCheck {
        name: "Poisson Π[f₂]",
        oracle: "200k-sample Monte Carlo, 4 standard errors",
        value: poisson.reference_integral()?.value,
        reference: mc,
        tolerance: 4.0 * se_mc,
    });

    let g = PiecewiseLinearFunction::new(vec![0.0, 0.2, 0.55, 1.0], vec![0.0, 0.3, -0.4, 0.1])?;
    let h = PiecewiseLinearFunction::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.2, 0.0])?;
    let slope_sq = quad::integrate_pieces(
        |x| {
            let eps = 1e-7;
            let d = |f: &PiecewiseLinearFunction<f64>| (f.eval(x + eps) - f.eval(x - eps)) / (2.0 * eps);
            (d(&g) - d(&h)).powi(2)
        },
        0.0,
        1.0,
        &[0.2, 0.5, 0.55],
        1e-9,
    );
    checks.push(OracleCheck {
        name: "Brownian-motion RKHS increment norm",
        oracle: "√∫(g′ − h′)² by quadrature of central differences",
        value: brownian_rkhs_increment_norm(&g, &h)?,
        reference: slope_sq.sqrt(),
        tolerance: 1e-6,
    });

    let norms = [62.5e-3, 22.5e-3, 3.125e-3];
    let costs = [3.6e-3, 8.5e-3, 42.4e-3];
    let plan = mlbq_allocation(&AllocationInput::mlbq(norms.to_vec(), costs.to_vec(), 0.376, 1.0, 1, 1.0)?)?;
    let (_, best) = lattice::best_allocation(&norms, 1.0, &costs, realized_cost(&plan.counts, &costs), 120).expect("feasible");
    let obj = Objective { weights: norms.to_vec(), power: 1.0 };
    checks.push(OracleCheck {
        name: "greedy MLBQ integerisation, T = 0.376",
        oracle: "exhaustive lattice search at the realised cost",
        value: obj.eval_counts(&plan.counts) / best,
        reference: 1.0,
        tolerance: 0.02,
    });

    let levels = [
        LevelData::new(0, PointSet::from_scalars(&[0.1, 0.45, 0.8])?, vec![0.3, -0.2, 0.5], 1.0)?,
        LevelData::new(1, PointSet::from_scalars(&[0.25, 0.7])?, vec![0.05, -0.01], 1.0)?,
    ];
    let ks = [Kernel::matern(Smoothness::Half, 1, 0.4, 1.3)?, Kernel::matern(Smoothness::Half, 1, 0.9, 0.2)?];
    let ml = mlbq_estimate(&levels, &ks, &[PriorMean::Zero, PriorMean::Zero], &unit, DEFAULT_NUGGET)?;
    let sum: f64 = levels
        .iter()
        .zip(&ks)
        .map(|(d, k)| {
            let fit = fit_gp(k, d.design(), d.increments(), &PriorMean::Zero, DEFAULT_NUGGET)?;
            Ok(bq_posterior(&fit, &unit)?.mean)
        })
        .sum::<mlbq::Result<f64>>()?;
    checks.push(OracleCheck {
        name: "MLBQ mean equals the sum of level BQ means",
        oracle: "independent per-level BQ fits",
        value: ml.mean,
        reference: sum,
        tolerance: 1e-12 * sum.abs(),
    });

    let grid = generate_design(DesignKind::Grid, &unit, 11, 0)?;
    checks.push(OracleCheck {
        name: "fill distance of an 11-point grid",
        oracle: "analytic half gap 1/(2(n − 1))",
        value: fill_distance(&grid.points, &unit, 10_001)?.value,
        reference: 0.05,
        tolerance: 1e-4,
    });
    Ok(checks)
}
