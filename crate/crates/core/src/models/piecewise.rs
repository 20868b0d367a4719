use crate::error::{Error, Result};
use crate::scalar::Real;

/// Continuous piecewise-linear function given by its values at breakpoints.
/// Outside the breakpoints it is extended by its end values.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFunction<T> {
    knots: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> PiecewiseLinearFunction<T> {
    pub fn new(knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::invalid("a piecewise-linear function needs at least two breakpoints"));
        }
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: knots.len(), got: values.len() });
        }
        if knots.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "piecewise-linear data" });
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        Ok(Self { knots, values })
    }

    /// The zero function on `[lo, hi]`.
    pub fn zero(lo: T, hi: T) -> Result<Self> {
        Self::new(vec![lo, hi], vec![T::zero(), T::zero()])
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn eval(&self, x: T) -> T {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let j = self.knots.partition_point(|&k| k <= x);
        let (x0, x1) = (self.knots[j - 1], self.knots[j]);
        let (y0, y1) = (self.values[j - 1], self.values[j]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Slope on each segment.
    pub fn slopes(&self) -> Vec<T> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .collect()
    }

    /// Exact integral over the breakpoint range.
    pub fn integral(&self) -> T {
        let half = T::lit(0.5);
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .fold(T::zero(), |acc, (k, v)| acc + half * (k[1] - k[0]) * (v[0] + v[1]))
    }

    /// `self − other` on the union of both breakpoint sets.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        let mut knots: Vec<T> = self.knots.iter().chain(&other.knots).copied().collect();
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        knots.dedup();
        let values = knots.iter().map(|&x| self.eval(x) - other.eval(x)).collect();
        Self::new(knots, values)
    }
}

/// Norm of `g − h` in the RKHS of `min(ω, ω′)` on `[0, t_max]`.
///
/// Writing `g − h = Σ_j α_j min(·, t_j)` with `α_j = s_j − s_{j+1}` (slope
/// drops at each breakpoint, the slope beyond the last breakpoint being zero),
/// the squared norm is `Σ_i Σ_j α_i α_j min(t_i, t_j)`, which equals
/// `∫ (g′ − h′)²`.
pub fn brownian_rkhs_increment_norm<T: Real>(
    g: &PiecewiseLinearFunction<T>,
    h: &PiecewiseLinearFunction<T>,
) -> Result<T> {
    for f in [g, h] {
        if f.knots[0] != T::zero() || f.values[0] != T::zero() {
            return Err(Error::invalid("Brownian-motion RKHS functions must start at 0 with value 0"));
        }
    }
    let diff = g.difference(h)?;
    let slopes = diff.slopes();
    let t = &diff.knots[1..];
    let alpha: Vec<T> = (0..slopes.len())
        .map(|j| slopes[j] - slopes.get(j + 1).copied().unwrap_or(T::zero()))
        .collect();
    let mut sq = T::zero();
    for i in 0..alpha.len() {
        for j in 0..alpha.len() {
            sq = sq + alpha[i] * alpha[j] * t[i].min(t[j]);
        }
    }
    Ok(sq.max(T::zero()).sqrt())
}
