//! Monte Carlo, multilevel Monte Carlo, Bayesian quadrature and multilevel
//! Bayesian quadrature estimators of `Π[f]`.

use crate::error::{Error, Result};
use crate::gp::{factor_with_ladder, fit_gp, GpFit, PriorMean};
use crate::kernels::{Kernel, ProductMeasure};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::points::PointSet;
use crate::scalar::Real;

/// Design and increment evaluations `f_l(W_l) − f_{l−1}(W_l)` for one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelData<T> {
    level: usize,
    design: PointSet<T>,
    increments: Vec<T>,
    cost: T,
}

impl<T: Real> LevelData<T> {
    pub fn new(level: usize, design: PointSet<T>, increments: Vec<T>, cost: T) -> Result<Self> {
        if design.is_empty() {
            return Err(Error::EmptyLevel { level });
        }
        if increments.len() != design.len() {
            return Err(Error::DimensionMismatch { expected: design.len(), got: increments.len() });
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "increments" });
        }
        if !(cost > T::zero() && cost.is_finite()) {
            return Err(Error::invalid(format!("level cost must be positive, got {cost}")));
        }
        Ok(Self { level, design, increments, cost })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn design(&self) -> &PointSet<T> {
        &self.design
    }

    pub fn increments(&self) -> &[T] {
        &self.increments
    }

    pub fn cost(&self) -> T {
        self.cost
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// `C_l n_l`.
    pub fn total_cost(&self) -> T {
        self.cost * T::from_usize_lossy(self.len())
    }

    /// Errors unless every design point lies in the support of `measure`.
    pub fn check_support(&self, measure: &ProductMeasure<T>) -> Result<()> {
        if self.design.dim() != measure.dim() {
            return Err(Error::DimensionMismatch { expected: measure.dim(), got: self.design.dim() });
        }
        if self.design.iter().any(|p| !measure.contains(p)) {
            return Err(Error::invalid(format!("level {} has points outside the measure's support", self.level)));
        }
        Ok(())
    }
}

/// Gaussian posterior on `Π[f]` with its per-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior<T> {
    pub mean: T,
    pub variance: T,
    pub level_means: Vec<T>,
    pub level_variances: Vec<T>,
}

impl<T: Real> GaussianPosterior<T> {
    fn from_levels(level_means: Vec<T>, level_variances: Vec<T>) -> Self {
        let mean = level_means.iter().fold(T::zero(), |a, &b| a + b);
        let variance = level_variances.iter().fold(T::zero(), |a, &b| a + b);
        Self { mean, variance, level_means, level_variances }
    }

    pub fn std_dev(&self) -> T {
        self.variance.sqrt()
    }

    /// Central credible interval with mass `q`.
    pub fn credible_interval(&self, q: f64) -> (T, T) {
        let half = T::lit(crate::special::central_quantile(q)) * self.std_dev();
        (self.mean - half, self.mean + half)
    }
}

/// Bayesian-quadrature posterior on `Π[f]` from a conditioned GP:
/// mean `Π[m] + Π[c(·,W)] K⁻¹ (y − m(W))`, variance
/// `Π[Π[c]] − Π[c(·,W)] K⁻¹ Π[c(W,·)]`.
pub fn bq_posterior<T: Real>(fit: &GpFit<T>, measure: &ProductMeasure<T>) -> Result<GaussianPosterior<T>> {
    let kernel = fit.kernel();
    let s2 = kernel.amplitude();
    let unit_means: Vec<T> = fit.kernel_means(measure)?.into_iter().map(|z| z / s2).collect();
    let mean = fit.prior_mean().integral()? + dot(&unit_means, fit.unit_weights());
    let prior = kernel.initial_error(measure)?;
    let variance = (prior - s2 * fit.unit_cholesky().quadratic_form(&unit_means)).max(T::zero());
    Ok(GaussianPosterior { mean, variance, level_means: vec![mean], level_variances: vec![variance] })
}

/// Sums independent per-level BQ posteriors.
pub fn mlbq_from_fits<T: Real>(fits: &[GpFit<T>], measure: &ProductMeasure<T>) -> Result<GaussianPosterior<T>> {
    if fits.is_empty() {
        return Err(Error::invalid("at least one level is required"));
    }
    let mut means = Vec::with_capacity(fits.len());
    let mut vars = Vec::with_capacity(fits.len());
    for (l, fit) in fits.iter().enumerate() {
        let p = bq_posterior(fit, measure).map_err(|e| e.at_level(l))?;
        means.push(p.mean);
        vars.push(p.variance);
    }
    Ok(GaussianPosterior::from_levels(means, vars))
}

fn check_levels<T: Real>(levels: &[LevelData<T>]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::invalid("at least one level is required"));
    }
    for (i, l) in levels.iter().enumerate() {
        if l.level != i {
            return Err(Error::invalid(format!("levels must be indexed 0..L in order; position {i} holds level {}", l.level)));
        }
    }
    Ok(())
}

/// Multilevel Bayesian quadrature with an independent GP per increment.
pub fn mlbq_estimate<T: Real>(
    levels: &[LevelData<T>],
    kernels: &[Kernel<T>],
    means: &[PriorMean<T>],
    measure: &ProductMeasure<T>,
    nugget: f64,
) -> Result<GaussianPosterior<T>> {
    check_levels(levels)?;
    if kernels.len() != levels.len() {
        return Err(Error::DimensionMismatch { expected: levels.len(), got: kernels.len() });
    }
    if means.len() != levels.len() {
        return Err(Error::DimensionMismatch { expected: levels.len(), got: means.len() });
    }
    let fits = levels
        .iter()
        .zip(kernels.iter().zip(means))
        .map(|(d, (k, m))| fit_gp(k, &d.design, &d.increments, m, nugget).map_err(|e| e.at_level(d.level)))
        .collect::<Result<Vec<_>>>()?;
    mlbq_from_fits(&fits, measure)
}

/// Plain Monte Carlo average.
pub fn mc_estimate<T: Real>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptyLevel { level: 0 });
    }
    let n = T::from_usize_lossy(values.len());
    Ok(values.iter().fold(T::zero(), |a, &b| a + b) / n)
}

/// Multilevel Monte Carlo: the sum of per-level increment averages.
pub fn mlmc_estimate<T: Real>(levels: &[LevelData<T>]) -> Result<T> {
    if levels.is_empty() {
        return Err(Error::invalid("at least one level is required"));
    }
    let mut total = T::zero();
    for l in levels {
        total = total + mc_estimate(&l.increments).map_err(|_| Error::EmptyLevel { level: l.level })?;
    }
    Ok(total)
}

/// Multilevel BQ under the separable prior `Cov(g_l(ω), g_{l′}(ω′)) = B_{l l′} c(ω, ω′)`
/// on the increments `g_l`, conditioned jointly on all levels.
///
/// Per-level contributions are the posterior covariances `Cov(Π[g_l], Π[f])`,
/// so they still sum to the totals and coincide with independent BQ when `B = I`.
pub fn sk_mlbq_estimate<T: Real>(
    levels: &[LevelData<T>],
    base: &Kernel<T>,
    coupling: &Matrix<T>,
    means: &[PriorMean<T>],
    measure: &ProductMeasure<T>,
    nugget: f64,
) -> Result<GaussianPosterior<T>> {
    check_levels(levels)?;
    let nl = levels.len();
    if coupling.size() != nl {
        return Err(Error::DimensionMismatch { expected: nl, got: coupling.size() });
    }
    if means.len() != nl {
        return Err(Error::DimensionMismatch { expected: nl, got: means.len() });
    }
    if !coupling.is_symmetric() {
        return Err(Error::invalid("coupling matrix must be symmetric"));
    }
    Cholesky::new(coupling)?;

    let mut owner = Vec::new();
    let mut points = Vec::new();
    let mut centered = Vec::new();
    let mut unit_means = Vec::new();
    for d in levels {
        if d.design.dim() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), got: d.design.dim() }.at_level(d.level));
        }
        for (p, &y) in d.design.iter().zip(&d.increments) {
            owner.push(d.level);
            points.push(p);
            centered.push(y - means[d.level].eval(p));
            unit_means.push(base.unit_kernel_mean(measure, p).map_err(|e| e.at_level(d.level))?);
        }
    }
    let n = points.len();
    let gram = Matrix::from_symmetric_fn(n, |a, b| coupling[(owner[a], owner[b])] * base.correlation(points[a], points[b]));
    let (chol, _) = factor_with_ladder(&gram, nugget)?;
    let weights = chol.solve(&centered);

    // z_l[a] = B_{l, l(a)} Π[c₁(·, w_a)]: unit-amplitude cross-covariance of Π[g_l] with the data.
    let z: Vec<Vec<T>> = (0..nl).map(|l| (0..n).map(|a| coupling[(l, owner[a])] * unit_means[a]).collect()).collect();
    let s2 = base.amplitude();
    let unit_initial = base.initial_error(measure)? / s2;
    let solved: Vec<Vec<T>> = z.iter().map(|zl| chol.solve_lower(zl)).collect();
    let mut level_means = Vec::with_capacity(nl);
    let mut level_vars = Vec::with_capacity(nl);
    for l in 0..nl {
        level_means.push(means[l].integral().map_err(|e| e.at_level(l))? + dot(&z[l], &weights));
        let mut v = T::zero();
        for m in 0..nl {
            v = v + coupling[(l, m)] * unit_initial - dot(&solved[l], &solved[m]);
        }
        level_vars.push(s2 * v);
    }
    let mut post = GaussianPosterior::from_levels(level_means, level_vars);
    post.variance = post.variance.max(T::zero());
    Ok(post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Smoothness;

    fn unit() -> ProductMeasure<f64> {
        ProductMeasure::unit_cube(1).unwrap()
    }

    fn level(l: usize, xs: &[f64], ys: &[f64]) -> LevelData<f64> {
        LevelData::new(l, PointSet::from_scalars(xs).unwrap(), ys.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn mlmc_examples() {
        assert_eq!(mlmc_estimate(&[level(0, &[0.1, 0.2], &[1.0, 3.0])]).unwrap(), 2.0);
        let two = [level(0, &[0.1, 0.2], &[1.0, 3.0]), level(1, &[0.3], &[0.5])];
        assert_eq!(mlmc_estimate(&two).unwrap(), 2.5);
    }

    #[test]
    fn one_point_bq() {
        let k = Kernel::matern(Smoothness::Half, 1, 1.0, 1.0).unwrap();
        let fit = fit_gp(&k, &PointSet::from_scalars(&[0.5]).unwrap(), &[1.0], &PriorMean::Zero, 0.0).unwrap();
        let p = bq_posterior(&fit, &unit()).unwrap();
        let z = 2.0 - 2.0 * (-0.5f64).exp();
        assert!((p.mean - z).abs() < 1e-14);
        assert!((p.variance - (2.0 * (-1f64).exp() - z * z)).abs() < 1e-14);
    }

    #[test]
    fn level_data_validation() {
        assert!(LevelData::new(0, PointSet::<f64>::new(1, vec![]).unwrap(), vec![], 1.0).is_err());
        assert!(LevelData::new(0, PointSet::from_scalars(&[0.1]).unwrap(), vec![1.0, 2.0], 1.0).is_err());
        assert!(LevelData::new(0, PointSet::from_scalars(&[0.1]).unwrap(), vec![1.0], 0.0).is_err());
        let outside = level(0, &[1.5], &[0.0]);
        assert!(outside.check_support(&unit()).is_err());
    }

    #[test]
    fn misordered_levels_rejected() {
        let k = Kernel::matern(Smoothness::Half, 1, 1.0, 1.0).unwrap();
        let lv = [level(1, &[0.5], &[1.0])];
        assert!(mlbq_estimate(&lv, &[k], &[PriorMean::Zero], &unit(), 0.0).is_err());
    }

    #[test]
    fn errors_carry_level() {
        let k = Kernel::brownian_motion(1.0).unwrap();
        let lv = [level(0, &[0.5], &[1.0]), level(1, &[0.5], &[1.0])];
        let err = mlbq_estimate(&lv, &[Kernel::matern(Smoothness::Half, 1, 1.0, 1.0).unwrap(), k], &[PriorMean::Zero, PriorMean::Zero], &unit(), 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::AtLevel { level: 1, .. }), "{err}");
    }
}
