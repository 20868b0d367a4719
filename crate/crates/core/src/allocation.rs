//! Budget-constrained sample sizes per level.
//!
//! Both multilevel estimators minimise a bound of the form `Σ w_l n_l^{−p}`
//! subject to `Σ C_l n_l = T`: multilevel Monte Carlo with `w = V`, `p = 1`,
//! multilevel BQ with `w = ‖f_l − f_{l−1}‖_τ`, `p = τ/d`.

use crate::error::{Error, Result};
use crate::kernels::{Factor, Kernel, Smoothness};
use crate::scalar::Real;

/// Inputs to an allocation. For MLMC `magnitudes` are level variances and
/// `smoothness`, `dim`, `overhead` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationInput<T> {
    pub magnitudes: Vec<T>,
    pub costs: Vec<T>,
    pub budget: T,
    pub smoothness: T,
    pub dim: usize,
    /// `γ ≥ 1`, the multiplier on evaluation cost that accounts for GP fitting.
    pub overhead: T,
}

impl<T: Real> AllocationInput<T> {
    pub fn mlmc(variances: Vec<T>, costs: Vec<T>, budget: T) -> Result<Self> {
        let inp = Self { magnitudes: variances, costs, budget, smoothness: T::one(), dim: 1, overhead: T::one() };
        inp.validate()?;
        Ok(inp)
    }

    pub fn mlbq(norms: Vec<T>, costs: Vec<T>, budget: T, smoothness: T, dim: usize, overhead: T) -> Result<Self> {
        let inp = Self { magnitudes: norms, costs, budget, smoothness, dim, overhead };
        inp.validate()?;
        Ok(inp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.magnitudes.is_empty() {
            return Err(Error::invalid("at least one level is required"));
        }
        if self.magnitudes.len() != self.costs.len() {
            return Err(Error::DimensionMismatch { expected: self.magnitudes.len(), got: self.costs.len() });
        }
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !self.magnitudes.iter().all(|&x| positive(x)) {
            return Err(Error::invalid("level magnitudes must be finite and positive"));
        }
        if !self.costs.iter().all(|&x| positive(x)) {
            return Err(Error::invalid("level costs must be finite and positive"));
        }
        if !positive(self.budget) {
            return Err(Error::invalid("budget must be finite and positive"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(self.smoothness > T::from_usize_lossy(self.dim) / T::lit(2.0)) || !self.smoothness.is_finite() {
            return Err(Error::invalid(format!("smoothness τ = {} must exceed d/2 = {}", self.smoothness, self.dim as f64 / 2.0)));
        }
        if !(self.overhead >= T::one()) || !self.overhead.is_finite() {
            return Err(Error::invalid("overhead γ must be at least 1"));
        }
        Ok(())
    }
}

/// `Σ w_l n_l^{−p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective<T> {
    pub weights: Vec<T>,
    pub power: T,
}

impl<T: Real> Objective<T> {
    pub fn eval(&self, n: &[T]) -> T {
        self.weights.iter().zip(n).fold(T::zero(), |acc, (&w, &x)| acc + w * x.powf(-self.power))
    }

    pub fn eval_counts(&self, n: &[usize]) -> T {
        self.weights
            .iter()
            .zip(n)
            .fold(T::zero(), |acc, (&w, &x)| acc + w * T::from_usize_lossy(x).powf(-self.power))
    }

    fn term(&self, l: usize, n: usize) -> T {
        self.weights[l] * T::from_usize_lossy(n).powf(-self.power)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan<T> {
    /// Continuous optimum.
    pub real: Vec<T>,
    pub counts: Vec<usize>,
    /// `Σ C_l n_l` for the integer counts, excluding any overhead factor.
    pub realized_cost: T,
    /// Objective at the continuous optimum.
    pub real_objective: T,
    /// Objective at the integer counts.
    pub objective: T,
}

/// `n_l = T √(V_l/C_l) / Σ √(V_l′ C_l′)`.
pub fn mlmc_allocation<T: Real>(inp: &AllocationInput<T>) -> Result<AllocationPlan<T>> {
    inp.validate()?;
    let denom = inp.magnitudes.iter().zip(&inp.costs).fold(T::zero(), |a, (&v, &c)| a + (v * c).sqrt());
    let real: Vec<T> = inp.magnitudes.iter().zip(&inp.costs).map(|(&v, &c)| inp.budget * (v / c).sqrt() / denom).collect();
    let objective = Objective { weights: inp.magnitudes.clone(), power: T::one() };
    plan(real, &inp.costs, inp.budget, objective)
}

/// `n_l = D (‖f_l − f_{l−1}‖ / C_l)^{d/(τ+d)}` with `D` chosen so that `γ Σ C_l n_l = T`.
pub fn mlbq_allocation<T: Real>(inp: &AllocationInput<T>) -> Result<AllocationPlan<T>> {
    inp.validate()?;
    let d = T::from_usize_lossy(inp.dim);
    let tau = inp.smoothness;
    let a = d / (tau + d);
    let b = tau / (tau + d);
    let denom = inp.magnitudes.iter().zip(&inp.costs).fold(T::zero(), |acc, (&w, &c)| acc + c.powf(b) * w.powf(a));
    let scale = inp.budget / (inp.overhead * denom);
    let real: Vec<T> = inp.magnitudes.iter().zip(&inp.costs).map(|(&w, &c)| scale * (w / c).powf(a)).collect();
    let objective = Objective { weights: inp.magnitudes.clone(), power: tau / d };
    plan(real, &inp.costs, inp.budget / inp.overhead, objective)
}

fn plan<T: Real>(real: Vec<T>, costs: &[T], budget: T, objective: Objective<T>) -> Result<AllocationPlan<T>> {
    let counts = integerize_allocation(&real, costs, budget, &objective)?;
    Ok(AllocationPlan {
        realized_cost: realized_cost(&counts, costs),
        real_objective: objective.eval(&real),
        objective: objective.eval_counts(&counts),
        real,
        counts,
    })
}

pub fn realized_cost<T: Real>(counts: &[usize], costs: &[T]) -> T {
    counts.iter().zip(costs).fold(T::zero(), |a, (&n, &c)| a + c * T::from_usize_lossy(n))
}

/// Rounds a continuous allocation to integers.
///
/// Each level is floored (at least 1). While the realised cost is below the
/// budget, one sample is added to the level with the largest objective
/// decrease per unit cost; the final addition may overshoot, so the result
/// costs at most `T + max C_l`. If the minimum-one rule alone pushes the cost
/// past that bound, samples are removed where the objective increase per unit
/// cost saved is smallest.
pub fn integerize_allocation<T: Real>(
    real: &[T],
    costs: &[T],
    budget: T,
    objective: &Objective<T>,
) -> Result<Vec<usize>> {
    if real.len() != costs.len() || objective.weights.len() != costs.len() {
        return Err(Error::DimensionMismatch { expected: costs.len(), got: real.len() });
    }
    if real.iter().any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(Error::invalid("real allocation must be finite and non-negative"));
    }
    let minimum = costs.iter().fold(T::zero(), |a, &c| a + c);
    if minimum > budget {
        return Err(Error::BudgetTooSmall { budget: budget.to_f64_lossy(), required: minimum.to_f64_lossy() });
    }
    let max_cost = costs.iter().copied().fold(T::zero(), T::max);
    let mut counts: Vec<usize> =
        real.iter().map(|x| x.floor().to_usize().unwrap_or(usize::MAX).max(1)).collect();
    let mut cost = realized_cost(&counts, costs);

    while cost > budget + max_cost {
        let mut best: Option<(usize, T)> = None;
        for l in 0..counts.len() {
            if counts[l] <= 1 {
                continue;
            }
            let rate = (objective.term(l, counts[l] - 1) - objective.term(l, counts[l])) / costs[l];
            if best.is_none_or(|(_, r)| rate < r) {
                best = Some((l, rate));
            }
        }
        let Some((l, _)) = best else { break };
        counts[l] -= 1;
        cost = realized_cost(&counts, costs);
    }

    let slack = budget * T::lit(1e-12);
    while cost < budget - slack {
        let mut best = (0, T::neg_infinity());
        for l in 0..counts.len() {
            let rate = (objective.term(l, counts[l]) - objective.term(l, counts[l] + 1)) / costs[l];
            if rate > best.1 {
                best = (l, rate);
            }
        }
        counts[best.0] += 1;
        cost = realized_cost(&counts, costs);
    }
    Ok(counts)
}

/// `τ` for a kernel's RKHS in the sense of norm equivalence with a Sobolev
/// space: `v + d/2` for Matérn factors and 1 for one-dimensional Brownian
/// motion. Squared-exponential kernels have no finite `τ`, so callers must
/// supply one explicitly.
pub fn kernel_smoothness<T: Real>(kernel: &Kernel<T>) -> Result<T> {
    let d = kernel.dim();
    let mut v: Option<Smoothness> = None;
    for f in kernel.factors() {
        let s = match f {
            Factor::Matern { smoothness, .. } => *smoothness,
            Factor::BrownianMotion if d == 1 => return Ok(T::one()),
            Factor::BrownianMotion => {
                return Err(Error::invalid("Brownian motion smoothness is only defined in one dimension"))
            }
            Factor::SquaredExponential { .. } => {
                return Err(Error::invalid("squared-exponential kernels need an explicit smoothness τ"))
            }
        };
        if v.is_some_and(|prev| prev != s) {
            return Err(Error::invalid("mixed Matérn smoothness has no single τ"));
        }
        v = Some(s);
    }
    let v = v.expect("kernel has at least one factor");
    Ok(T::lit(v.value() + d as f64 / 2.0))
}
