//! Multilevel Bayesian quadrature.
//!
//! Estimates `Π[f] = ∫ f dΠ` from a hierarchy of approximations `f_0, …, f_L`
//! of increasing cost by placing an independent Gaussian-process prior on each
//! increment `f_l − f_{l−1}` and summing the Bayesian-quadrature posteriors.
//! Multilevel Monte Carlo, plain Monte Carlo and a jointly coupled variant are
//! provided as baselines, together with the budget allocation rules for both
//! multilevel estimators.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision case.

pub mod allocation;
pub mod designs;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod models;
pub mod points;
pub mod quadrature;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use kernels::{Factor, Kernel, Marginal, ProductMeasure, Smoothness};
pub use points::PointSet;
pub use scalar::Real;

pub type Kernel64 = Kernel<f64>;
pub type Kernel32 = Kernel<f32>;
pub type ProductMeasure64 = ProductMeasure<f64>;
pub type ProductMeasure32 = ProductMeasure<f32>;
pub type PointSet64 = PointSet<f64>;
pub type PointSet32 = PointSet<f32>;
