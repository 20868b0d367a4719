use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special;

/// One coordinate of a product integration measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal<T> {
    Uniform { lo: T, hi: T },
    StandardNormal,
}

impl<T: Real> Marginal<T> {
    pub fn uniform(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || !(lo < hi) {
            return Err(Error::invalid(format!("uniform marginal needs finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Marginal::Uniform { lo, hi })
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Marginal::Uniform { .. })
    }

    pub fn contains(&self, x: T) -> bool {
        match *self {
            Marginal::Uniform { lo, hi } => x >= lo && x <= hi,
            Marginal::StandardNormal => x.is_finite(),
        }
    }

    /// Maps `u ∈ [0, 1]` through the inverse distribution function.
    pub fn inverse_cdf(&self, u: T) -> T {
        match *self {
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * u,
            Marginal::StandardNormal => T::lit(special::norm_inv_cdf(u.to_f64_lossy())),
        }
    }

    /// Supremum of the density.
    pub fn density_bound(&self) -> T {
        match *self {
            Marginal::Uniform { lo, hi } => T::one() / (hi - lo),
            Marginal::StandardNormal => T::one() / (T::lit(2.0) * T::PI()).sqrt(),
        }
    }
}

impl<T: Real> fmt::Display for Marginal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Uniform { lo, hi } => write!(f, "Uniform({lo}, {hi})"),
            Marginal::StandardNormal => write!(f, "StandardNormal"),
        }
    }
}

/// Product probability measure on `Ω ⊆ ℝᵈ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure<T> {
    marginals: Vec<Marginal<T>>,
}

impl<T: Real> ProductMeasure<T> {
    pub fn new(marginals: Vec<Marginal<T>>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::invalid("a measure needs at least one dimension"));
        }
        for m in &marginals {
            if let Marginal::Uniform { lo, hi } = *m {
                Marginal::uniform(lo, hi)?;
            }
        }
        Ok(Self { marginals })
    }

    pub fn uniform(lo: T, hi: T) -> Result<Self> {
        Ok(Self { marginals: vec![Marginal::uniform(lo, hi)?] })
    }

    pub fn unit_cube(dim: usize) -> Result<Self> {
        Self::new(vec![Marginal::Uniform { lo: T::zero(), hi: T::one() }; dim])
    }

    pub fn standard_normal(dim: usize) -> Result<Self> {
        Self::new(vec![Marginal::StandardNormal; dim])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal<T>] {
        &self.marginals
    }

    pub fn is_bounded(&self) -> bool {
        self.marginals.iter().all(Marginal::is_bounded)
    }

    pub fn contains(&self, point: &[T]) -> bool {
        point.len() == self.dim() && self.marginals.iter().zip(point).all(|(m, &x)| m.contains(x))
    }

    /// `‖π‖_∞`, the supremum of the product density.
    pub fn density_bound(&self) -> T {
        self.marginals.iter().fold(T::one(), |acc, m| acc * m.density_bound())
    }
}
