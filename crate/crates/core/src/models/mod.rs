//! Multifidelity testbeds: a level hierarchy `f_0, …, f_L` with declared costs.

mod gauss;
mod ode;
mod piecewise;
mod poisson;
mod step;

pub use gauss::gauss_legendre;
pub use ode::{Ode, OdeConfig};
pub use piecewise::{brownian_rkhs_increment_norm, PiecewiseLinearFunction};
pub use poisson::{Poisson, PoissonConfig};
pub use step::{Step, StepConfig};

use crate::error::{Error, Result};
use crate::kernels::ProductMeasure;
use crate::points::PointSet;
use crate::quadrature::LevelData;
use crate::scalar::Real;

/// Reference value of an integral with an estimate of its own error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference<T> {
    pub value: T,
    /// Zero for exact references.
    pub error: T,
}

pub trait MultifidelityModel<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    /// `L + 1`.
    fn levels(&self) -> usize;

    fn measure(&self) -> &ProductMeasure<T>;

    fn costs(&self) -> &[T];

    /// `f_l(ω)`; deterministic.
    fn eval_level(&self, level: usize, point: &[T]) -> Result<T>;

    /// `Π[f_L]`, the quantity every multilevel estimator targets.
    fn reference_integral(&self) -> Result<Reference<T>>;

    fn dim(&self) -> usize {
        self.measure().dim()
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.levels() {
            return Err(Error::LevelOutOfRange { level, levels: self.levels() });
        }
        Ok(())
    }

    /// `f_l(ω) − f_{l−1}(ω)` with `f_{−1} ≡ 0`.
    fn increment(&self, level: usize, point: &[T]) -> Result<T> {
        let fine = self.eval_level(level, point)?;
        if level == 0 {
            Ok(fine)
        } else {
            Ok(fine - self.eval_level(level - 1, point)?)
        }
    }

    /// Evaluates increments on a design and packages them with the level cost.
    fn level_data(&self, level: usize, design: &PointSet<T>) -> Result<LevelData<T>> {
        self.check_level(level)?;
        if design.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: design.dim() });
        }
        let y = design.iter().map(|p| self.increment(level, p)).collect::<Result<Vec<_>>>()?;
        LevelData::new(level, design.clone(), y, self.costs()[level])
    }
}

fn check_costs<T: Real>(costs: &[T], levels: usize) -> Result<()> {
    if costs.len() != levels {
        return Err(Error::DimensionMismatch { expected: levels, got: costs.len() });
    }
    if costs.iter().any(|&c| !(c > T::zero() && c.is_finite())) {
        return Err(Error::invalid("level costs must be finite and positive"));
    }
    Ok(())
}
