use super::{check_costs, MultifidelityModel, Reference};
use crate::error::{Error, Result};
use crate::kernels::ProductMeasure;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig<T> {
    /// Breakpoints per level, each strictly increasing from `lo` to `hi`.
    pub breakpoints: Vec<Vec<T>>,
    pub costs: Vec<T>,
    pub lo: T,
    pub hi: T,
}

impl<T: Real> StepConfig<T> {
    /// Equispaced breakpoints with the given counts on `[lo, hi]`.
    pub fn equispaced(counts: &[usize], costs: Vec<T>, lo: T, hi: T) -> Result<Self> {
        let mut breakpoints = Vec::with_capacity(counts.len());
        for &p in counts {
            if p < 2 {
                return Err(Error::invalid("a step level needs at least two breakpoints"));
            }
            let step = (hi - lo) / T::from_usize_lossy(p - 1);
            breakpoints.push((0..p).map(|i| if i + 1 == p { hi } else { lo + step * T::from_usize_lossy(i) }).collect());
        }
        Ok(Self { breakpoints, costs, lo, hi })
    }
}

impl<T: Real> Default for StepConfig<T> {
    fn default() -> Self {
        Self::equispaced(&[3, 5, 9], [1.0e-5, 2.0e-5, 6.0e-5].map(T::lit).to_vec(), T::zero(), T::lit(10.0))
            .expect("valid default")
    }
}

/// Cell-midpoint step approximations of `f(ω) = ω` on Unif(lo, hi).
#[derive(Debug, Clone)]
pub struct Step<T> {
    config: StepConfig<T>,
    measure: ProductMeasure<T>,
}

impl<T: Real> Step<T> {
    pub fn new(config: StepConfig<T>) -> Result<Self> {
        if config.breakpoints.is_empty() {
            return Err(Error::invalid("at least one level is required"));
        }
        check_costs(&config.costs, config.breakpoints.len())?;
        let measure = ProductMeasure::uniform(config.lo, config.hi)?;
        for b in &config.breakpoints {
            if b.len() < 2 || b[0] != config.lo || b[b.len() - 1] != config.hi || b.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::invalid("breakpoints must increase strictly from lo to hi"));
            }
        }
        Ok(Self { config, measure })
    }

    /// `Π[f_l] = Σ (cell length · cell midpoint) / (hi − lo)`.
    pub fn level_integral(&self, level: usize) -> Result<T> {
        self.check_level(level)?;
        let b = &self.config.breakpoints[level];
        let half = T::lit(0.5);
        let sum = b.windows(2).fold(T::zero(), |acc, w| acc + (w[1] - w[0]) * half * (w[0] + w[1]));
        Ok(sum / (self.config.hi - self.config.lo))
    }
}

impl<T: Real> MultifidelityModel<T> for Step<T> {
    fn name(&self) -> &str {
        "step"
    }

    fn levels(&self) -> usize {
        self.config.breakpoints.len()
    }

    fn measure(&self) -> &ProductMeasure<T> {
        &self.measure
    }

    fn costs(&self) -> &[T] {
        &self.config.costs
    }

    fn eval_level(&self, level: usize, point: &[T]) -> Result<T> {
        self.check_level(level)?;
        let [x] = point else {
            return Err(Error::DimensionMismatch { expected: 1, got: point.len() });
        };
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "model input" });
        }
        let b = &self.config.breakpoints[level];
        // cell [b_{i−1}, b_i) containing x; the right end belongs to the last cell
        let i = b.partition_point(|&k| k <= *x).clamp(1, b.len() - 1);
        Ok(T::lit(0.5) * (b[i - 1] + b[i]))
    }

    fn reference_integral(&self) -> Result<Reference<T>> {
        Ok(Reference { value: self.level_integral(self.levels() - 1)?, error: T::zero() })
    }
}
