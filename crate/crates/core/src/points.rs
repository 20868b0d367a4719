use crate::error::{Error, Result};
use crate::scalar::Real;

/// A set of `n` points in `d` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> PointSet<T> {
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, got: data.len() % dim });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "point coordinates" });
        }
        Ok(Self { dim, data })
    }

    /// One-dimensional point set from scalar locations.
    pub fn from_scalars(xs: &[T]) -> Result<Self> {
        Self::new(1, xs.to_vec())
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    /// Appends the points of `other` (same dimension).
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { dim: self.dim, data })
    }
}
