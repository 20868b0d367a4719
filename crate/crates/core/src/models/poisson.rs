use std::sync::OnceLock;

use super::{check_costs, MultifidelityModel, PiecewiseLinearFunction, Reference};
use crate::error::{Error, Result};
use crate::kernels::ProductMeasure;
use crate::linalg::solve_tridiagonal;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonConfig<T> {
    /// Number of finite elements at each level.
    pub elements: Vec<usize>,
    pub costs: Vec<T>,
}

impl<T: Real> Default for PoissonConfig<T> {
    fn default() -> Self {
        Self { elements: vec![4, 16, 64], costs: [3.6e-3, 8.5e-3, 42.4e-3].map(T::lit).to_vec() }
    }
}

/// Piecewise-linear Galerkin approximations of `u″ = 1`, `u(0) = u(1) = 0`,
/// whose exact solution is `½ω(ω − 1)`, on Unif(0, 1).
#[derive(Debug)]
pub struct Poisson<T> {
    config: PoissonConfig<T>,
    measure: ProductMeasure<T>,
    solutions: OnceLock<Vec<PiecewiseLinearFunction<T>>>,
}

impl<T: Real> Poisson<T> {
    pub fn new(config: PoissonConfig<T>) -> Result<Self> {
        if config.elements.is_empty() {
            return Err(Error::invalid("at least one level is required"));
        }
        if config.elements.iter().any(|&p| p < 2) {
            return Err(Error::invalid("each level needs at least two elements"));
        }
        check_costs(&config.costs, config.elements.len())?;
        Ok(Self { config, measure: ProductMeasure::unit_cube(1)?, solutions: OnceLock::new() })
    }

    pub fn config(&self) -> &PoissonConfig<T> {
        &self.config
    }

    /// The exact solution `½ω(ω − 1)`.
    pub fn exact_solution(x: T) -> T {
        T::lit(0.5) * x * (x - T::one())
    }

    /// `Π[f] = −1/12`.
    pub fn exact_integral() -> T {
        -T::one() / T::lit(12.0)
    }

    /// Finite-element solution at each level.
    pub fn solutions(&self) -> &[PiecewiseLinearFunction<T>] {
        self.solutions.get_or_init(|| self.config.elements.iter().map(|&p| solve_level(p)).collect())
    }

    pub fn solution(&self, level: usize) -> Result<&PiecewiseLinearFunction<T>> {
        self.check_level(level)?;
        Ok(&self.solutions()[level])
    }

    /// `Π[f_l]`, exact.
    pub fn level_integral(&self, level: usize) -> Result<T> {
        Ok(self.solution(level)?.integral())
    }

    /// Brownian-motion RKHS norms `‖f_0‖, ‖f_1 − f_0‖, …`.
    pub fn increment_norms(&self) -> Result<Vec<T>> {
        let sols = self.solutions();
        let zero = PiecewiseLinearFunction::zero(T::zero(), T::one())?;
        (0..sols.len())
            .map(|l| super::brownian_rkhs_increment_norm(&sols[l], if l == 0 { &zero } else { &sols[l - 1] }))
            .collect()
    }
}

fn solve_level<T: Real>(elements: usize) -> PiecewiseLinearFunction<T> {
    let h = T::one() / T::from_usize_lossy(elements);
    let m = elements - 1;
    // Stiffness (1/h)·tridiag(−1, 2, −1) applied to the nodal values equals
    // minus the load ∫v_i = h.
    let inv_h = T::one() / h;
    let sub = vec![-inv_h; m];
    let diag = vec![T::lit(2.0) * inv_h; m];
    let rhs = vec![-h; m];
    let interior = solve_tridiagonal(&sub, &diag, &sub, &rhs).expect("stiffness matrix is positive definite");
    let knots = (0..=elements).map(|i| if i == elements { T::one() } else { h * T::from_usize_lossy(i) }).collect();
    let mut values = Vec::with_capacity(elements + 1);
    values.push(T::zero());
    values.extend(interior);
    values.push(T::zero());
    PiecewiseLinearFunction::new(knots, values).expect("valid mesh")
}

impl<T: Real> MultifidelityModel<T> for Poisson<T> {
    fn name(&self) -> &str {
        "poisson"
    }

    fn levels(&self) -> usize {
        self.config.elements.len()
    }

    fn measure(&self) -> &ProductMeasure<T> {
        &self.measure
    }

    fn costs(&self) -> &[T] {
        &self.config.costs
    }

    fn eval_level(&self, level: usize, point: &[T]) -> Result<T> {
        let f = self.solution(level)?;
        match point {
            [x] if x.is_finite() => Ok(f.eval(*x)),
            [_] => Err(Error::NonFinite { what: "model input" }),
            _ => Err(Error::DimensionMismatch { expected: 1, got: point.len() }),
        }
    }

    fn reference_integral(&self) -> Result<Reference<T>> {
        Ok(Reference { value: self.level_integral(self.levels() - 1)?, error: T::zero() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodal_values_four_elements() {
        let p = Poisson::<f64>::new(PoissonConfig { elements: vec![4], costs: vec![1.0] }).unwrap();
        let v = p.solution(0).unwrap().values();
        for (a, b) in v[1..4].iter().zip([-0.09375, -0.125, -0.09375]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn level_integrals() {
        let p = Poisson::<f64>::new(PoissonConfig::default()).unwrap();
        for (l, &e) in [4usize, 16, 64].iter().enumerate() {
            let h = 1.0 / e as f64;
            assert!((p.level_integral(l).unwrap() - (-1.0 / 12.0 + h * h / 12.0)).abs() < 1e-14);
        }
        assert!(p.eval_level(3, &[0.5]).is_err());
    }
}
