//! Covariance functions and their integrals against product measures.

mod integrals;
mod measure;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use measure::{Marginal, ProductMeasure};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::points::PointSet;
use crate::scalar::Real;

/// Samples used by [`Kernel::initial_error`] when a factor has no closed form.
pub const DEFAULT_INITIAL_ERROR_SAMPLES: usize = 1_000_000;
/// Seed for that fallback, so repeated calls agree bit for bit.
pub const DEFAULT_INITIAL_ERROR_SEED: u64 = 0x6d6c_6271;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Smoothness {
    Half,
    FiveHalves,
}

impl Smoothness {
    pub fn value(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::FiveHalves => 2.5,
        }
    }
}

/// One-dimensional factor of a tensor-product kernel, at unit amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor<T> {
    Matern { smoothness: Smoothness, lengthscale: T },
    SquaredExponential { lengthscale: T },
    /// `min(x, y)`; meaningful on `[0, ∞)`.
    BrownianMotion,
}

impl<T: Real> Factor<T> {
    pub fn lengthscale(&self) -> Option<T> {
        match *self {
            Factor::Matern { lengthscale, .. } | Factor::SquaredExponential { lengthscale } => Some(lengthscale),
            Factor::BrownianMotion => None,
        }
    }

    /// Same family with another lengthscale. Brownian motion is returned unchanged.
    pub fn with_lengthscale(self, lengthscale: T) -> Self {
        match self {
            Factor::Matern { smoothness, .. } => Factor::Matern { smoothness, lengthscale },
            Factor::SquaredExponential { .. } => Factor::SquaredExponential { lengthscale },
            Factor::BrownianMotion => Factor::BrownianMotion,
        }
    }

    #[inline]
    pub fn eval(&self, x: T, y: T) -> T {
        match *self {
            Factor::Matern { smoothness: Smoothness::Half, lengthscale } => (-(x - y).abs() / lengthscale).exp(),
            Factor::Matern { smoothness: Smoothness::FiveHalves, lengthscale } => {
                let s = T::lit(5f64.sqrt()) * (x - y).abs() / lengthscale;
                (T::one() + s + s * s / T::lit(3.0)) * (-s).exp()
            }
            Factor::SquaredExponential { lengthscale } => {
                let r = (x - y) / lengthscale;
                (-(r * r)).exp()
            }
            Factor::BrownianMotion => x.min(y),
        }
    }

    fn validate(&self) -> Result<()> {
        match self.lengthscale() {
            Some(g) if !(g > T::zero() && g.is_finite()) => {
                Err(Error::invalid(format!("lengthscale must be finite and positive, got {g}")))
            }
            _ => Ok(()),
        }
    }
}

impl<T: Real> fmt::Display for Factor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Matern { smoothness, lengthscale } => {
                write!(f, "Matern({}, γ={lengthscale})", smoothness.value())
            }
            Factor::SquaredExponential { lengthscale } => write!(f, "SquaredExponential(γ={lengthscale})"),
            Factor::BrownianMotion => write!(f, "BrownianMotion"),
        }
    }
}

/// Tensor-product covariance `σ² ∏ᵢ cᵢ(ωᵢ, ω′ᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    factors: Vec<Factor<T>>,
    amplitude: T,
}

/// Monte Carlo estimate returned when an initial error has no closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialError<T> {
    pub value: T,
    /// Zero when the value is exact.
    pub std_error: T,
}

impl<T: Real> Kernel<T> {
    pub fn new(factors: Vec<Factor<T>>, amplitude: T) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("a kernel needs at least one factor"));
        }
        for f in &factors {
            f.validate()?;
        }
        if !(amplitude > T::zero() && amplitude.is_finite()) {
            return Err(Error::invalid(format!("amplitude must be finite and positive, got {amplitude}")));
        }
        Ok(Self { factors, amplitude })
    }

    pub fn matern(smoothness: Smoothness, dim: usize, lengthscale: T, amplitude: T) -> Result<Self> {
        Self::new(vec![Factor::Matern { smoothness, lengthscale }; dim], amplitude)
    }

    pub fn squared_exponential(dim: usize, lengthscale: T, amplitude: T) -> Result<Self> {
        Self::new(vec![Factor::SquaredExponential { lengthscale }; dim], amplitude)
    }

    pub fn brownian_motion(amplitude: T) -> Result<Self> {
        Self::new(vec![Factor::BrownianMotion], amplitude)
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor<T>] {
        &self.factors
    }

    /// `σ²`.
    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    pub fn with_amplitude(&self, amplitude: T) -> Result<Self> {
        Self::new(self.factors.clone(), amplitude)
    }

    /// Per-dimension lengthscales; `None` for Brownian-motion factors.
    pub fn lengthscales(&self) -> Vec<Option<T>> {
        self.factors.iter().map(Factor::lengthscale).collect()
    }

    /// Replaces every lengthscale by `lengthscale`.
    pub fn with_shared_lengthscale(&self, lengthscale: T) -> Result<Self> {
        let factors = self.factors.iter().map(|f| f.with_lengthscale(lengthscale)).collect();
        Self::new(factors, self.amplitude)
    }

    pub fn with_lengthscales(&self, lengthscales: &[T]) -> Result<Self> {
        self.check_dim(lengthscales.len())?;
        let factors = self.factors.iter().zip(lengthscales).map(|(f, &g)| f.with_lengthscale(g)).collect();
        Self::new(factors, self.amplitude)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }

    fn check_point(&self, p: &[T]) -> Result<()> {
        self.check_dim(p.len())?;
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "kernel input" });
        }
        Ok(())
    }

    /// Unit-amplitude product without input checks.
    #[inline]
    pub(crate) fn correlation(&self, a: &[T], b: &[T]) -> T {
        self.factors.iter().zip(a.iter().zip(b)).fold(T::one(), |acc, (f, (&x, &y))| acc * f.eval(x, y))
    }

    pub fn eval(&self, a: &[T], b: &[T]) -> Result<T> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(self.amplitude * self.correlation(a, b))
    }

    pub fn gram(&self, points: &PointSet<T>) -> Result<Matrix<T>> {
        Ok(self.correlation_gram(points)?.scaled(self.amplitude))
    }

    pub(crate) fn correlation_gram(&self, points: &PointSet<T>) -> Result<Matrix<T>> {
        self.check_dim(points.dim())?;
        Ok(Matrix::from_symmetric_fn(points.len(), |i, j| self.correlation(points.point(i), points.point(j))))
    }

    /// Cross-covariance `c(A, B)` as an `|A| × |B|` row-major vector of rows.
    pub fn cross(&self, a: &PointSet<T>, b: &PointSet<T>) -> Result<Vec<Vec<T>>> {
        self.check_dim(a.dim())?;
        self.check_dim(b.dim())?;
        Ok(a.iter().map(|p| b.iter().map(|q| self.amplitude * self.correlation(p, q)).collect()).collect())
    }

    fn check_measure(&self, measure: &ProductMeasure<T>) -> Result<()> {
        self.check_dim(measure.dim())
    }

    /// Kernel mean `Π[c(·, ω)]`.
    pub fn kernel_mean(&self, measure: &ProductMeasure<T>, point: &[T]) -> Result<T> {
        self.check_measure(measure)?;
        self.check_point(point)?;
        Ok(self.amplitude * self.unit_kernel_mean(measure, point)?)
    }

    pub(crate) fn unit_kernel_mean(&self, measure: &ProductMeasure<T>, point: &[T]) -> Result<T> {
        let mut acc = T::one();
        for ((f, m), &x) in self.factors.iter().zip(measure.marginals()).zip(point) {
            acc = acc * integrals::kernel_mean_1d(f, m, x)?;
        }
        Ok(acc)
    }

    /// Kernel means at every point of a design.
    pub fn kernel_means(&self, measure: &ProductMeasure<T>, points: &PointSet<T>) -> Result<Vec<T>> {
        self.check_measure(measure)?;
        self.check_dim(points.dim())?;
        points.iter().map(|p| Ok(self.amplitude * self.unit_kernel_mean(measure, p)?)).collect()
    }

    /// Initial error `Π[Π[c]]`, with the default Monte Carlo fallback for factors
    /// lacking a closed form.
    pub fn initial_error(&self, measure: &ProductMeasure<T>) -> Result<T> {
        Ok(self
            .initial_error_estimate(measure, DEFAULT_INITIAL_ERROR_SAMPLES, DEFAULT_INITIAL_ERROR_SEED)?
            .value)
    }

    /// Initial error with a standard error. Factors without a closed form are
    /// estimated by averaging their closed-form kernel mean over `samples`
    /// seeded draws; the standard error of the product is propagated to first order.
    pub fn initial_error_estimate(
        &self,
        measure: &ProductMeasure<T>,
        samples: usize,
        seed: u64,
    ) -> Result<InitialError<T>> {
        self.check_measure(measure)?;
        let mut value = self.amplitude;
        let mut rel_var = 0.0f64;
        for (i, (f, m)) in self.factors.iter().zip(measure.marginals()).enumerate() {
            match integrals::initial_error_1d(f, m)? {
                Some(v) => value = value * v,
                None => {
                    if samples < 2 {
                        return Err(Error::invalid("Monte Carlo initial error needs at least 2 samples"));
                    }
                    let (mean, se) = mc_factor_mean(f, m, samples, seed.wrapping_add(i as u64))?;
                    value = value * T::lit(mean);
                    rel_var += (se / mean).powi(2);
                }
            }
        }
        Ok(InitialError { value, std_error: value * T::lit(rel_var.sqrt()) })
    }
}

/// Mean and standard error of `∫ c(x, t) dm(t)` over `x ~ m`.
fn mc_factor_mean<T: Real>(factor: &Factor<T>, marginal: &Marginal<T>, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for k in 0..samples {
        let x = match *marginal {
            Marginal::StandardNormal => T::lit(rng.sample::<f64, _>(StandardNormal)),
            Marginal::Uniform { .. } => marginal.inverse_cdf(T::lit(rng.random::<f64>())),
        };
        let v = integrals::kernel_mean_1d(factor, marginal, x)?.to_f64_lossy();
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok((mean, (var / samples as f64).sqrt()))
}

impl<T: Real> fmt::Display for Kernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} × ", self.amplitude)?;
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ⊗ ")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}
