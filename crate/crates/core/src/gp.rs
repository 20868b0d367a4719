//! Gaussian-process conditioning, marginal likelihood and per-level
//! hyperparameter estimation.
//!
//! Gram matrices are factorised at unit amplitude, `K₁ + νI`, and the
//! amplitude is applied afterwards. That keeps the nugget relative to `σ²` and
//! lets the amplitude be profiled out in closed form.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, ProductMeasure};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::points::PointSet;
use crate::scalar::Real;

/// Relative nugget used when callers have no preference.
pub const DEFAULT_NUGGET: f64 = 1e-10;
/// Largest relative nugget the ladder will try before giving up.
pub const MAX_NUGGET: f64 = 1e-4;
const FIRST_RUNG: f64 = 1e-10;

const GRID_POINTS: usize = 32;
const GOLDEN_REL_TOL: f64 = 1e-4;
const COORDINATE_SWEEPS: usize = 3;

type MeanFn<T> = dyn Fn(&[T]) -> T + Send + Sync;

/// Prior mean `m` of a GP, together with `Π[m]` when it is known.
#[derive(Clone)]
pub enum PriorMean<T> {
    Zero,
    Constant(T),
    Function { f: Arc<MeanFn<T>>, integral: Option<T> },
}

impl<T: Real> PriorMean<T> {
    pub fn function(f: impl Fn(&[T]) -> T + Send + Sync + 'static, integral: Option<T>) -> Self {
        PriorMean::Function { f: Arc::new(f), integral }
    }

    pub fn eval(&self, point: &[T]) -> T {
        match self {
            PriorMean::Zero => T::zero(),
            PriorMean::Constant(c) => *c,
            PriorMean::Function { f, .. } => f(point),
        }
    }

    /// `Π[m]`; a probability measure integrates constants to themselves.
    pub fn integral(&self) -> Result<T> {
        match self {
            PriorMean::Zero => Ok(T::zero()),
            PriorMean::Constant(c) => Ok(*c),
            PriorMean::Function { integral: Some(v), .. } => Ok(*v),
            PriorMean::Function { integral: None, .. } => {
                Err(Error::invalid("prior mean function has no known integral"))
            }
        }
    }
}

impl<T: Real> Default for PriorMean<T> {
    fn default() -> Self {
        PriorMean::Zero
    }
}

impl<T: fmt::Debug> fmt::Debug for PriorMean<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorMean::Zero => write!(f, "Zero"),
            PriorMean::Constant(c) => write!(f, "Constant({c:?})"),
            PriorMean::Function { integral, .. } => write!(f, "Function {{ integral: {integral:?} }}"),
        }
    }
}

/// A GP conditioned on `(W, y)`.
#[derive(Debug, Clone)]
pub struct GpFit<T> {
    kernel: Kernel<T>,
    design: PointSet<T>,
    mean: PriorMean<T>,
    centered: Vec<T>,
    chol: Cholesky<T>,
    // (K₁ + νI)⁻¹(y − m(W)); the amplitude cancels in the posterior mean.
    unit_weights: Vec<T>,
    nugget: T,
}

fn check_data<T: Real>(kernel: &Kernel<T>, design: &PointSet<T>, y: &[T]) -> Result<()> {
    if design.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: design.dim() });
    }
    if design.is_empty() {
        return Err(Error::invalid("a GP needs at least one observation"));
    }
    if y.len() != design.len() {
        return Err(Error::DimensionMismatch { expected: design.len(), got: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "observations" });
    }
    Ok(())
}

/// Factorises `K₁ + νI`, escalating `ν` by decades from `start` (or from
/// `10⁻¹⁰` when `start` is zero) up to `10⁻⁴`.
pub(crate) fn factor_with_ladder<T: Real>(unit_gram: &Matrix<T>, start: f64) -> Result<(Cholesky<T>, T)> {
    if !(start >= 0.0 && start.is_finite()) {
        return Err(Error::invalid(format!("nugget must be finite and non-negative, got {start}")));
    }
    let mut nugget = start;
    loop {
        let mut a = unit_gram.clone();
        a.add_diagonal(T::lit(nugget));
        if let Ok(chol) = Cholesky::new(&a) {
            return Ok((chol, T::lit(nugget)));
        }
        let next = if nugget == 0.0 { FIRST_RUNG } else { nugget * 10.0 };
        if next > MAX_NUGGET * (1.0 + 1e-9) {
            return Err(Error::SingularGram { nugget });
        }
        nugget = next;
    }
}

/// Conditions the GP prior `(m, c)` on `y = f(W)`.
pub fn fit_gp<T: Real>(
    kernel: &Kernel<T>,
    design: &PointSet<T>,
    y: &[T],
    mean: &PriorMean<T>,
    nugget: f64,
) -> Result<GpFit<T>> {
    check_data(kernel, design, y)?;
    let unit_gram = kernel.correlation_gram(design)?;
    let (chol, nugget) = factor_with_ladder(&unit_gram, nugget)?;
    let centered: Vec<T> = design.iter().zip(y).map(|(p, &v)| v - mean.eval(p)).collect();
    let unit_weights = chol.solve(&centered);
    Ok(GpFit {
        kernel: kernel.clone(),
        design: design.clone(),
        mean: mean.clone(),
        centered,
        chol,
        unit_weights,
        nugget,
    })
}

impl<T: Real> GpFit<T> {
    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn design(&self) -> &PointSet<T> {
        &self.design
    }

    pub fn prior_mean(&self) -> &PriorMean<T> {
        &self.mean
    }

    /// `y − m(W)`.
    pub fn centered_observations(&self) -> &[T] {
        &self.centered
    }

    /// Relative nugget actually used, after any escalation.
    pub fn nugget(&self) -> T {
        self.nugget
    }

    /// `(gram + ν σ² I)⁻¹ (y − m(W))`.
    pub fn weights(&self) -> Vec<T> {
        let s = self.kernel.amplitude();
        self.unit_weights.iter().map(|&w| w / s).collect()
    }

    /// Lower Cholesky factor of `gram + ν σ² I`.
    pub fn cholesky_factor(&self) -> Matrix<T> {
        self.chol.factor().scaled(self.kernel.amplitude().sqrt())
    }

    pub(crate) fn unit_cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }

    pub(crate) fn unit_weights(&self) -> &[T] {
        &self.unit_weights
    }

    /// Posterior mean and variance of `f(ω)`.
    pub fn posterior_at(&self, point: &[T]) -> Result<(T, T)> {
        let prior_var = self.kernel.eval(point, point)?;
        let k: Vec<T> = self.design.iter().map(|p| self.kernel.correlation(point, p)).collect();
        let mean = self.mean.eval(point) + dot(&k, &self.unit_weights);
        let var = prior_var - self.kernel.amplitude() * self.chol.quadratic_form(&k);
        Ok((mean, var.max(T::zero())))
    }

    /// `−½ (y−m)ᵀ K⁻¹ (y−m) − ½ log det K − (n/2) log 2π` with `K = σ²(K₁ + νI)`.
    pub fn log_marginal_likelihood(&self) -> T {
        let n = T::from_usize_lossy(self.design.len());
        let s2 = self.kernel.amplitude();
        let half = T::lit(0.5);
        let quad = dot(&self.centered, &self.unit_weights) / s2;
        let log_det = self.chol.log_det() + n * s2.ln();
        -half * quad - half * log_det - half * n * (T::lit(2.0) * T::PI()).ln()
    }

    /// `σ* = √((y−m)ᵀ (K₁ + νI)⁻¹ (y−m) / n)`; the maximising amplitude is `σ*²`.
    pub fn mle_amplitude(&self) -> T {
        let n = T::from_usize_lossy(self.design.len());
        (self.chol.quadratic_form(&self.centered) / n).sqrt()
    }

    /// `Π[c(·, W)]`, needed by Bayesian quadrature.
    pub fn kernel_means(&self, measure: &ProductMeasure<T>) -> Result<Vec<T>> {
        self.kernel.kernel_means(measure, &self.design)
    }
}

/// Free-function form of [`GpFit::posterior_at`].
pub fn gp_posterior_at<T: Real>(fit: &GpFit<T>, point: &[T]) -> Result<(T, T)> {
    fit.posterior_at(point)
}

pub fn log_marginal_likelihood<T: Real>(
    kernel: &Kernel<T>,
    design: &PointSet<T>,
    y: &[T],
    mean: &PriorMean<T>,
    nugget: f64,
) -> Result<T> {
    Ok(fit_gp(kernel, design, y, mean, nugget)?.log_marginal_likelihood())
}

/// Closed-form maximiser `σ*` of the marginal likelihood over the amplitude.
/// The kernel's own amplitude is ignored.
pub fn mle_amplitude<T: Real>(
    kernel: &Kernel<T>,
    design: &PointSet<T>,
    y: &[T],
    mean: &PriorMean<T>,
    nugget: f64,
) -> Result<T> {
    let unit = kernel.with_amplitude(T::one())?;
    Ok(fit_gp(&unit, design, y, mean, nugget)?.mle_amplitude())
}

/// Search interval for lengthscales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthscaleBounds<T> {
    pub lo: T,
    pub hi: T,
    /// One lengthscale per dimension instead of a shared one.
    pub per_dimension: bool,
}

impl<T: Real> LengthscaleBounds<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        let b = Self { lo, hi, per_dimension: false };
        b.validate()?;
        Ok(b)
    }

    pub fn per_dimension(mut self) -> Self {
        self.per_dimension = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo > T::zero() && self.lo < self.hi && self.hi.is_finite()) {
            return Err(Error::invalid(format!(
                "lengthscale bounds need 0 < lo < hi < ∞, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn geometric_midpoint(&self) -> T {
        (self.lo * self.hi).sqrt()
    }
}

/// Profiled log marginal likelihood: the amplitude is replaced by its
/// maximiser, `−(n/2)(1 + log 2πσ*²) − ½ log det(K₁ + νI)`.
/// Returns `None` when the Gram matrix is singular even after the nugget ladder.
pub fn profiled_log_likelihood<T: Real>(
    kernel: &Kernel<T>,
    design: &PointSet<T>,
    y: &[T],
    mean: &PriorMean<T>,
    nugget: f64,
) -> Result<Option<T>> {
    check_data(kernel, design, y)?;
    let unit_gram = kernel.correlation_gram(design)?;
    let Ok((chol, _)) = factor_with_ladder(&unit_gram, nugget) else {
        return Ok(None);
    };
    let centered: Vec<T> = design.iter().zip(y).map(|(p, &v)| v - mean.eval(p)).collect();
    Ok(Some(profiled_from(&chol, &centered)))
}

fn profiled_from<T: Real>(chol: &Cholesky<T>, centered: &[T]) -> T {
    let n = T::from_usize_lossy(centered.len());
    let half = T::lit(0.5);
    let s2 = (chol.quadratic_form(centered) / n).max(T::min_positive_value());
    -half * n * (T::one() + (T::lit(2.0) * T::PI() * s2).ln()) - half * chol.log_det()
}

/// Maximises the amplitude-profiled marginal likelihood over lengthscales in
/// `bounds`, then sets the amplitude to `σ*²`.
///
/// The search is a 32-point log-spaced grid followed by golden-section
/// refinement around the best grid point; per-dimension lengthscales are
/// refined by three cyclic sweeps starting from the shared optimum. When the
/// data carry no information (all centred observations zero) the geometric
/// midpoint of the bounds is returned with the smallest positive amplitude.
pub fn fit_hyperparameters<T: Real>(
    template: &Kernel<T>,
    design: &PointSet<T>,
    y: &[T],
    mean: &PriorMean<T>,
    bounds: LengthscaleBounds<T>,
    nugget: f64,
) -> Result<Kernel<T>> {
    bounds.validate()?;
    check_data(template, design, y)?;
    let centered: Vec<T> = design.iter().zip(y).map(|(p, &v)| v - mean.eval(p)).collect();
    let has_lengthscale = template.lengthscales().iter().any(Option::is_some);
    let unit = template.with_amplitude(T::one())?;

    if centered.iter().all(|v| *v == T::zero()) {
        let k = if has_lengthscale { unit.with_shared_lengthscale(bounds.geometric_midpoint())? } else { unit };
        return k.with_amplitude(T::min_positive_value());
    }

    let score = |k: &Kernel<T>| -> Result<Option<T>> {
        let gram = k.correlation_gram(design)?;
        Ok(factor_with_ladder(&gram, nugget).ok().map(|(chol, _)| profiled_from(&chol, &centered)))
    };

    let mut best = unit.clone();
    if has_lengthscale {
        let shared = maximise_1d(bounds, |g| score(&unit.with_shared_lengthscale(g)?))?;
        best = unit.with_shared_lengthscale(shared)?;
        if bounds.per_dimension && template.dim() > 1 {
            let mut ls: Vec<T> = best.lengthscales().iter().map(|g| g.unwrap_or(T::one())).collect();
            for _ in 0..COORDINATE_SWEEPS {
                for j in 0..ls.len() {
                    if template.factors()[j].lengthscale().is_none() {
                        continue;
                    }
                    let current = ls.clone();
                    ls[j] = maximise_1d(bounds, |g| {
                        let mut trial = current.clone();
                        trial[j] = g;
                        score(&unit.with_lengthscales(&trial)?)
                    })?;
                }
            }
            best = unit.with_lengthscales(&ls)?;
        }
    }

    let gram = best.correlation_gram(design)?;
    let (chol, _) = factor_with_ladder(&gram, nugget)?;
    let n = T::from_usize_lossy(centered.len());
    let s2 = (chol.quadratic_form(&centered) / n).max(T::min_positive_value());
    best.with_amplitude(s2)
}

/// Deterministic bounded maximisation in log-lengthscale.
fn maximise_1d<T: Real>(
    bounds: LengthscaleBounds<T>,
    mut objective: impl FnMut(T) -> Result<Option<T>>,
) -> Result<T> {
    let (a, b) = (bounds.lo.ln(), bounds.hi.ln());
    let step = (b - a) / T::from_usize_lossy(GRID_POINTS - 1);
    let mut eval = |x: T| -> Result<T> { Ok(objective(x.exp())?.unwrap_or(T::neg_infinity())) };

    let xs: Vec<T> = (0..GRID_POINTS).map(|i| if i + 1 == GRID_POINTS { b } else { a + step * T::from_usize_lossy(i) }).collect();
    let mut vals = Vec::with_capacity(GRID_POINTS);
    for &x in &xs {
        vals.push(eval(x)?);
    }
    let (mut ibest, mut vbest) = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v > vbest {
            ibest = i;
            vbest = v;
        }
    }
    if vbest == T::neg_infinity() {
        return Err(Error::SingularGram { nugget: MAX_NUGGET });
    }
    let vmin = vals.iter().copied().filter(|v| v.is_finite()).fold(vbest, T::min);
    if vbest - vmin <= T::lit(1e-12) * (T::one() + vbest.abs()) {
        return Ok(bounds.geometric_midpoint());
    }

    let mut lo = xs[ibest.saturating_sub(1)];
    let mut hi = xs[(ibest + 1).min(GRID_POINTS - 1)];
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let tol = T::lit(GOLDEN_REL_TOL);
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = eval(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = eval(d)?;
        }
    }
    let (x, v) = if fc >= fd { (c, fc) } else { (d, fd) };
    let x = if v >= vbest { x } else { xs[ibest] };
    Ok(x.exp().max(bounds.lo).min(bounds.hi))
}
