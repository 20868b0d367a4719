//! Point sets mapped onto an integration measure, and fill-distance diagnostics.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::kernels::{Marginal, ProductMeasure};
use crate::points::PointSet;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignKind {
    Iid,
    Grid,
    Halton,
    Lhs,
}

impl DesignKind {
    /// Whether the design depends on the seed.
    pub fn is_random(self) -> bool {
        matches!(self, DesignKind::Iid | DesignKind::Lhs)
    }

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Iid => "iid",
            DesignKind::Grid => "grid",
            DesignKind::Halton => "halton",
            DesignKind::Lhs => "lhs",
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iid" => Ok(DesignKind::Iid),
            "grid" => Ok(DesignKind::Grid),
            "halton" | "qmc" => Ok(DesignKind::Halton),
            "lhs" => Ok(DesignKind::Lhs),
            other => Err(Error::invalid(format!("unknown design kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design<T> {
    pub kind: DesignKind,
    pub points: PointSet<T>,
    /// Seed actually consumed; `None` for deterministic kinds.
    pub seed: Option<u64>,
}

/// Derives an independent stream seed from a master seed and a path such as
/// `[budget index, replication, level]`, by SplitMix64 finalisation.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn draw<T: Real>(m: &Marginal<T>, rng: &mut ChaCha8Rng) -> T {
    match m {
        Marginal::Uniform { .. } => m.inverse_cdf(T::lit(rng.sample::<f64, _>(Open01))),
        Marginal::StandardNormal => T::lit(rng.sample::<f64, _>(StandardNormal)),
    }
}

fn iid<T: Real>(measure: &ProductMeasure<T>, n: usize, seed: u64) -> Vec<T> {
    let mut r = rng(seed);
    let mut data = Vec::with_capacity(n * measure.dim());
    for _ in 0..n {
        for m in measure.marginals() {
            data.push(draw(m, &mut r));
        }
    }
    data
}

fn grid<T: Real>(measure: &ProductMeasure<T>, n: usize) -> Result<Vec<T>> {
    let d = measure.dim();
    let per = (n as f64).powf(1.0 / d as f64).round() as usize;
    if per.checked_pow(d as u32) != Some(n) {
        return Err(Error::invalid(format!("grid of {n} points is not a perfect power of dimension {d}")));
    }
    let mut axes = Vec::with_capacity(d);
    for m in measure.marginals() {
        let Marginal::Uniform { lo, hi } = *m else {
            return Err(Error::UnboundedMarginal("a grid design"));
        };
        let axis: Vec<T> = if per == 1 {
            vec![(lo + hi) / T::lit(2.0)]
        } else {
            let step = T::one() / T::from_usize_lossy(per - 1);
            (0..per).map(|i| if i + 1 == per { hi } else { lo + (hi - lo) * step * T::from_usize_lossy(i) }).collect()
        };
        axes.push(axis);
    }
    let mut data = Vec::with_capacity(n * d);
    for idx in 0..n {
        let mut rem = idx;
        let mut point = vec![T::zero(); d];
        for k in (0..d).rev() {
            point[k] = axes[k][rem % per];
            rem /= per;
        }
        data.extend(point);
    }
    Ok(data)
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn halton<T: Real>(measure: &ProductMeasure<T>, n: usize) -> Result<Vec<T>> {
    let d = measure.dim();
    if d > PRIMES.len() {
        return Err(Error::invalid(format!("Halton designs support at most {} dimensions", PRIMES.len())));
    }
    let mut data = Vec::with_capacity(n * d);
    for i in 1..=n as u64 {
        for (m, &b) in measure.marginals().iter().zip(&PRIMES) {
            data.push(m.inverse_cdf(T::lit(radical_inverse(i, b))));
        }
    }
    Ok(data)
}

fn lhs<T: Real>(measure: &ProductMeasure<T>, n: usize, seed: u64) -> Vec<T> {
    let d = measure.dim();
    let mut r = rng(seed);
    let mut data = vec![T::zero(); n * d];
    let inv_n = 1.0 / n as f64;
    for (k, m) in measure.marginals().iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut r);
        for (i, &s) in strata.iter().enumerate() {
            let u: f64 = r.sample(Open01);
            let x = ((s as f64 + u) * inv_n).min(1.0 - f64::EPSILON / 2.0);
            data[i * d + k] = m.inverse_cdf(T::lit(x));
        }
    }
    data
}

/// Generates `n` points distributed according to `measure`.
///
/// `seed` is only used by the IID and Latin-hypercube kinds.
pub fn generate_design<T: Real>(kind: DesignKind, measure: &ProductMeasure<T>, n: usize, seed: u64) -> Result<Design<T>> {
    if n == 0 {
        return Err(Error::invalid("a design needs at least one point"));
    }
    let data = match kind {
        DesignKind::Iid => iid(measure, n, seed),
        DesignKind::Grid => grid(measure, n)?,
        DesignKind::Halton => halton(measure, n)?,
        DesignKind::Lhs => lhs(measure, n, seed),
    };
    Ok(Design { kind, points: PointSet::new(measure.dim(), data)?, seed: kind.is_random().then_some(seed) })
}

/// IID design whose points come from a mixture of sampling measures rather
/// than from the integration measure. Component `i` receives a share of the
/// `n` points proportional to its weight (largest-remainder rounding), in
/// component order.
pub fn iid_mixture<T: Real>(components: &[(f64, ProductMeasure<T>)], n: usize, seed: u64) -> Result<Design<T>> {
    if components.is_empty() || n == 0 {
        return Err(Error::invalid("a mixture design needs components and at least one point"));
    }
    let d = components[0].1.dim();
    if components.iter().any(|(w, m)| !(*w > 0.0 && w.is_finite()) || m.dim() != d) {
        return Err(Error::invalid("mixture weights must be positive and dimensions equal"));
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    let exact: Vec<f64> = components.iter().map(|(w, _)| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    let mut data = Vec::with_capacity(n * d);
    for (i, ((_, m), &c)) in components.iter().zip(&counts).enumerate() {
        data.extend(iid(m, c, derive_seed(seed, &[i as u64])));
    }
    Ok(Design { kind: DesignKind::Iid, points: PointSet::new(d, data)?, seed: Some(seed) })
}

/// Lattice estimate of the fill distance `sup_ω min_i ‖ω − ω_i‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillDistance<T> {
    pub value: T,
    /// Half the diagonal of a lattice cell: the true fill distance lies in
    /// `[value, value + spacing]`.
    pub spacing: T,
}

/// Evaluates the distance to the nearest design point on a lattice with
/// `resolution` points per dimension (at least 1000 lattice points in total).
pub fn fill_distance<T: Real>(points: &PointSet<T>, measure: &ProductMeasure<T>, resolution: usize) -> Result<FillDistance<T>> {
    let d = measure.dim();
    if points.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: points.dim() });
    }
    if points.is_empty() {
        return Err(Error::invalid("fill distance of an empty design"));
    }
    let mut bounds = Vec::with_capacity(d);
    for m in measure.marginals() {
        match *m {
            Marginal::Uniform { lo, hi } => bounds.push((lo, hi)),
            Marginal::StandardNormal => return Err(Error::UnboundedMarginal("fill distance")),
        }
    }
    if resolution < 2 || (resolution as f64).powi(d as i32) < 1000.0 {
        return Err(Error::invalid("fill-distance lattice needs at least 1000 candidate points"));
    }
    let total = resolution.checked_pow(d as u32).ok_or_else(|| Error::invalid("fill-distance lattice too large"))?;
    let steps: Vec<T> = bounds.iter().map(|&(lo, hi)| (hi - lo) / T::from_usize_lossy(resolution - 1)).collect();
    let mut worst = T::zero();
    let mut candidate = vec![T::zero(); d];
    for idx in 0..total {
        let mut rem = idx;
        for k in 0..d {
            candidate[k] = bounds[k].0 + steps[k] * T::from_usize_lossy(rem % resolution);
            rem /= resolution;
        }
        let nearest = points
            .iter()
            .map(|p| p.iter().zip(&candidate).fold(T::zero(), |a, (&x, &c)| a + (x - c) * (x - c)))
            .fold(T::infinity(), T::min);
        worst = worst.max(nearest);
    }
    let spacing = steps.iter().fold(T::zero(), |a, &s| a + s * s / T::lit(4.0)).sqrt();
    Ok(FillDistance { value: worst.sqrt(), spacing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_with_endpoints() {
        let mu = ProductMeasure::<f64>::unit_cube(1).unwrap();
        let d = generate_design(DesignKind::Grid, &mu, 3, 0).unwrap();
        assert_eq!(d.points.as_flat(), &[0.0, 0.5, 1.0]);
        assert_eq!(d.seed, None);
    }

    #[test]
    fn grid_rejects_gaussian_and_non_powers() {
        let g = ProductMeasure::<f64>::standard_normal(1).unwrap();
        assert!(matches!(generate_design(DesignKind::Grid, &g, 4, 0), Err(Error::UnboundedMarginal(_))));
        let sq = ProductMeasure::<f64>::unit_cube(2).unwrap();
        assert!(generate_design(DesignKind::Grid, &sq, 5, 0).is_err());
        assert_eq!(generate_design(DesignKind::Grid, &sq, 9, 0).unwrap().points.len(), 9);
    }

    #[test]
    fn van_der_corput() {
        let mu = ProductMeasure::<f64>::unit_cube(1).unwrap();
        let d = generate_design(DesignKind::Halton, &mu, 4, 0).unwrap();
        assert_eq!(d.points.as_flat(), &[0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn lhs_stratifies() {
        let mu = ProductMeasure::<f64>::unit_cube(1).unwrap();
        let d = generate_design(DesignKind::Lhs, &mu, 5, 11).unwrap();
        let mut strata: Vec<usize> = d.points.as_flat().iter().map(|x| (x * 5.0).floor() as usize).collect();
        strata.sort_unstable();
        assert_eq!(strata, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn fill_distance_examples() {
        let mu = ProductMeasure::<f64>::unit_cube(1).unwrap();
        let three = PointSet::from_scalars(&[0.0, 0.5, 1.0]).unwrap();
        let h = fill_distance(&three, &mu, 1001).unwrap();
        assert!((h.value - 0.25).abs() <= h.spacing);
        let one = PointSet::from_scalars(&[0.5]).unwrap();
        let h = fill_distance(&one, &mu, 1001).unwrap();
        assert!((h.value - 0.5).abs() <= h.spacing);
    }

    #[test]
    fn mixture_split() {
        let a = ProductMeasure::<f64>::uniform(0.0, 5.0).unwrap();
        let b = ProductMeasure::<f64>::uniform(5.0, 10.0).unwrap();
        let d = iid_mixture(&[(0.9, a), (0.1, b)], 20, 3).unwrap();
        let low = d.points.as_flat().iter().filter(|&&x| x <= 5.0).count();
        assert_eq!(low, 18);
    }

    #[test]
    fn seeds_differ_along_paths() {
        let a = derive_seed(1, &[0, 0]);
        assert_ne!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(2, &[0, 0]));
        assert_ne!(derive_seed(1, &[1, 0]), derive_seed(1, &[0, 1]));
    }
}
