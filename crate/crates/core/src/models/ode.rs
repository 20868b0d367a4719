use super::{check_costs, gauss_legendre, MultifidelityModel, Reference};
use crate::error::{Error, Result};
use crate::kernels::{Marginal, ProductMeasure};
use crate::linalg::solve_tridiagonal;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeConfig<T> {
    /// `1/h_l` at each level.
    pub intervals: Vec<usize>,
    pub costs: Vec<T>,
    /// Forcing constant `r` in `(c u′)′ = r ω₂²`.
    pub forcing: T,
}

impl<T: Real> Default for OdeConfig<T> {
    fn default() -> Self {
        Self {
            intervals: vec![8, 32, 128],
            costs: [1.0e-3, 2.6e-3, 21.8e-3].map(T::lit).to_vec(),
            forcing: T::lit(50.0),
        }
    }
}

/// `((1 + ω₁x) u′)′ = r ω₂²` on `(0, 1)` with `u(0) = u(1) = 0`,
/// `ω₁ ~ Unif(0, 1)`, `ω₂ ~ N(0, 1)` and `f(ω) = ∫₀¹ u dx`, discretised by
/// one-sided first and central second differences.
#[derive(Debug, Clone)]
pub struct Ode<T> {
    config: OdeConfig<T>,
    measure: ProductMeasure<T>,
}

const REFERENCE_NODES: usize = 32;

impl<T: Real> Ode<T> {
    pub fn new(config: OdeConfig<T>) -> Result<Self> {
        if config.intervals.is_empty() {
            return Err(Error::invalid("at least one level is required"));
        }
        if config.intervals.iter().any(|&n| n < 2) {
            return Err(Error::invalid("each level needs at least two intervals"));
        }
        check_costs(&config.costs, config.intervals.len())?;
        if !config.forcing.is_finite() {
            return Err(Error::NonFinite { what: "forcing constant" });
        }
        let measure = ProductMeasure::new(vec![Marginal::uniform(T::zero(), T::one())?, Marginal::StandardNormal])?;
        Ok(Self { config, measure })
    }

    pub fn config(&self) -> &OdeConfig<T> {
        &self.config
    }

    /// `h Σ u_i` for the solution on `intervals` subintervals.
    pub fn solve(&self, intervals: usize, w1: T, w2: T) -> Result<T> {
        let n = intervals;
        let h = T::one() / T::from_usize_lossy(n);
        let inv_h = T::one() / h;
        let inv_h2 = inv_h * inv_h;
        let m = n - 1;
        let mut sub = Vec::with_capacity(m);
        let mut diag = Vec::with_capacity(m);
        let mut sup = Vec::with_capacity(m);
        for i in 1..=m {
            let fi = T::from_usize_lossy(i);
            sub.push(w1 * (fi - T::one()) * inv_h + inv_h2);
            diag.push(w1 * (T::one() - T::lit(2.0) * fi) * inv_h - T::lit(2.0) * inv_h2);
            sup.push(w1 * fi * inv_h + inv_h2);
        }
        let rhs = vec![self.config.forcing * w2 * w2; m];
        let u = solve_tridiagonal(&sub, &diag, &sup, &rhs).map_err(|e| match e {
            Error::TridiagonalBreakdown { row, .. } => {
                Error::TridiagonalBreakdown { row, context: format!(" (h = 1/{n}, ω = ({w1}, {w2}))") }
            }
            other => other,
        })?;
        Ok(h * u.iter().fold(T::zero(), |a, &x| a + x))
    }

    /// `∫₀¹ f(ω₁, 1) dω₁` on `intervals` subintervals by Gauss–Legendre with
    /// `nodes` points. Since `f` is linear in `ω₂²` and `E[ω₂²] = 1`, this is
    /// the integral over both inputs.
    fn integral_at(&self, intervals: usize, nodes: usize) -> Result<T> {
        let (x, w) = gauss_legendre(nodes, 0.0, 1.0);
        let mut acc = T::zero();
        for (&xi, &wi) in x.iter().zip(&w) {
            acc = acc + T::lit(wi) * self.solve(intervals, T::lit(xi), T::one())?;
        }
        Ok(acc)
    }

    /// `Π[f_l]` by tensor quadrature, with the difference from a half-order
    /// rule as its error estimate.
    pub fn level_integral(&self, level: usize) -> Result<Reference<T>> {
        self.check_level(level)?;
        let n = self.config.intervals[level];
        let fine = self.integral_at(n, REFERENCE_NODES)?;
        let coarse = self.integral_at(n, REFERENCE_NODES / 2)?;
        Ok(Reference { value: fine, error: (fine - coarse).abs() })
    }

    /// Approximation of `Π[f]` itself from a solver `refinement` times finer
    /// than the top level.
    pub fn continuum_reference(&self, refinement: usize) -> Result<Reference<T>> {
        let top = *self.config.intervals.last().expect("non-empty");
        let n = top.checked_mul(refinement.max(1)).ok_or_else(|| Error::invalid("refinement too large"))?;
        let fine = self.integral_at(n, REFERENCE_NODES)?;
        let coarse = self.integral_at(n, REFERENCE_NODES / 2)?;
        Ok(Reference { value: fine, error: (fine - coarse).abs() })
    }
}

impl<T: Real> MultifidelityModel<T> for Ode<T> {
    fn name(&self) -> &str {
        "ode"
    }

    fn levels(&self) -> usize {
        self.config.intervals.len()
    }

    fn measure(&self) -> &ProductMeasure<T> {
        &self.measure
    }

    fn costs(&self) -> &[T] {
        &self.config.costs
    }

    fn eval_level(&self, level: usize, point: &[T]) -> Result<T> {
        self.check_level(level)?;
        let [w1, w2] = point else {
            return Err(Error::DimensionMismatch { expected: 2, got: point.len() });
        };
        if !(w1.is_finite() && w2.is_finite()) {
            return Err(Error::NonFinite { what: "model input" });
        }
        self.solve(self.config.intervals[level], *w1, *w2)
    }

    fn reference_integral(&self) -> Result<Reference<T>> {
        self.level_integral(self.levels() - 1)
    }
}
