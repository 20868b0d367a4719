//! Closed-form one-dimensional kernel means `∫ k(x, t) dΠ(t)` and initial errors
//! `∬ k(s, t) dΠ(s) dΠ(t)` for unit-amplitude factors.

use super::measure::Marginal;
use super::{Factor, Smoothness};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn no_closed_form<T: Real>(factor: &Factor<T>, marginal: &Marginal<T>) -> Error {
    Error::NoClosedForm { factor: factor.to_string(), marginal: marginal.to_string() }
}

/// Odd antiderivative `G(u) = ∫₀ᵘ k(|s|) ds` of a stationary factor.
///
/// For any `x`, `∫ₐᵇ k(|x − t|) dt = G(x − a) + G(b − x)`, which holds whether or
/// not `x` lies inside `[a, b]`.
fn stationary_antiderivative<T: Real>(factor: &Factor<T>, u: T) -> Option<T> {
    let sign = u.signum();
    let au = u.abs();
    let g = match *factor {
        Factor::Matern { smoothness: Smoothness::Half, lengthscale } => {
            -lengthscale * (-au / lengthscale).exp_m1()
        }
        Factor::Matern { smoothness: Smoothness::FiveHalves, lengthscale } => {
            let lambda = T::lit(5f64.sqrt()) / lengthscale;
            let x = lambda * au;
            // (8 − e^{−x}(8 + 5x + x²)) / (3λ)
            let inner = -T::lit(8.0) * (-x).exp_m1() - (-x).exp() * (T::lit(5.0) * x + x * x);
            inner / (T::lit(3.0) * lambda)
        }
        Factor::SquaredExponential { lengthscale } => {
            T::PI().sqrt() * lengthscale / T::lit(2.0) * (au / lengthscale).erf()
        }
        Factor::BrownianMotion => return None,
    };
    Some(sign * g)
}

pub(super) fn kernel_mean_1d<T: Real>(factor: &Factor<T>, marginal: &Marginal<T>, x: T) -> Result<T> {
    match *marginal {
        Marginal::Uniform { lo, hi } => {
            if matches!(factor, Factor::BrownianMotion) {
                return Err(no_closed_form(factor, marginal));
            }
            let g = |u| stationary_antiderivative(factor, u).expect("stationary factor");
            Ok((g(x - lo) + g(hi - x)) / (hi - lo))
        }
        Marginal::StandardNormal => match *factor {
            Factor::SquaredExponential { lengthscale } => {
                let s = lengthscale * lengthscale + T::lit(2.0);
                Ok(lengthscale * (-(x * x) / s).exp() / s.sqrt())
            }
            Factor::Matern { smoothness: Smoothness::FiveHalves, lengthscale } => {
                Ok(matern52_gaussian_mean(lengthscale, x))
            }
            _ => Err(no_closed_form(factor, marginal)),
        },
    }
}

/// Matérn-5/2 kernel mean under N(0, 1).
///
/// Split at `t = x` and integrate the polynomial-times-exponential against the
/// shifted Gaussian on each half line. Each half is
/// `½·e^{−x²/2}·erfcx(z)·(1 + λμ + λ²(μ² + 1)/3) + φ₀(x)·(λ + λ²μ/3)`
/// with `λ = √5/γ`, `μ = ∓x − λ`, `z = −μ/√2` and `φ₀(x) = e^{−x²/2}/√(2π)`.
/// Working with `erfcx` keeps every factor finite for any `x`.
fn matern52_gaussian_mean<T: Real>(lengthscale: T, x: T) -> T {
    let half = T::lit(0.5);
    let third = T::one() / T::lit(3.0);
    let lambda = T::lit(5f64.sqrt()) / lengthscale;
    let lambda2 = lambda * lambda;
    let gauss = (-half * x * x).exp();
    let phi0 = gauss / (T::lit(2.0) * T::PI()).sqrt();

    let side = |mu: T, exponent: T| {
        let z = -mu / T::SQRT_2();
        // e^{−x²/2}·erfcx(z); for z < 0 use erfcx(z) = 2e^{z²} − erfcx(−z), with
        // z² − x²/2 supplied analytically as `exponent`.
        let scaled = if z >= T::zero() {
            gauss * z.erfcx()
        } else {
            T::lit(2.0) * exponent.exp() - gauss * (-z).erfcx()
        };
        half * scaled * (T::one() + lambda * mu + lambda2 * (mu * mu + T::one()) * third)
            + phi0 * (lambda + lambda2 * mu * third)
    };
    let left = side(x - lambda, half * lambda2 - lambda * x);
    let right = side(-x - lambda, half * lambda2 + lambda * x);
    left + right
}

/// `Ok(None)` means no closed form exists but the kernel mean does, so the
/// caller can fall back to Monte Carlo.
pub(super) fn initial_error_1d<T: Real>(factor: &Factor<T>, marginal: &Marginal<T>) -> Result<Option<T>> {
    let two = T::lit(2.0);
    match *marginal {
        Marginal::Uniform { lo, hi } => {
            let w = hi - lo;
            let w2 = w * w;
            let v = match *factor {
                Factor::Matern { smoothness: Smoothness::Half, lengthscale: g } => {
                    two * g * (w + g * (-w / g).exp_m1()) / w2
                }
                Factor::Matern { smoothness: Smoothness::FiveHalves, lengthscale: g } => {
                    let r5 = T::lit(5f64.sqrt());
                    let fifteen = T::lit(15.0);
                    let inner = T::lit(8.0) * r5 * w * g - fifteen * g * g
                        + (-r5 * w / g).exp()
                            * (T::lit(5.0) * w2 + T::lit(7.0) * r5 * w * g + fifteen * g * g);
                    two * inner / (fifteen * w2)
                }
                Factor::SquaredExponential { lengthscale: g } => {
                    g * (g * (-(w2) / (g * g)).exp_m1() + w * T::PI().sqrt() * (w / g).erf()) / w2
                }
                Factor::BrownianMotion => return Err(no_closed_form(factor, marginal)),
            };
            Ok(Some(v))
        }
        Marginal::StandardNormal => match *factor {
            Factor::SquaredExponential { lengthscale: g } => {
                Ok(Some(g / (g * g + T::lit(4.0)).sqrt()))
            }
            Factor::Matern { smoothness: Smoothness::FiveHalves, .. } => Ok(None),
            _ => Err(no_closed_form(factor, marginal)),
        },
    }
}
