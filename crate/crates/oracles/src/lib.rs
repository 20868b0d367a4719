//! Reference computations that share no code with `mlbq`: adaptive
//! Gauss–Kronrod quadrature, dense Gauss–Jordan algebra, exhaustive lattice
//! search and Monte Carlo summaries. Everything is plain `f64`.

pub mod dense;
pub mod lattice;
pub mod quad;
pub mod stats;
