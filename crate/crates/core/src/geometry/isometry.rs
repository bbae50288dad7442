use super::hyperboloid as hyp;
use super::point::{FurstenbergPoint, ProductPoint, TangentVector};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A product of factor isometries, each a Lorentz matrix on `R^{n_i+1}`.
///
/// Factor isometries preserve every scaled product metric, so these act on
/// points, tangent vectors and the Furstenberg boundary simultaneously.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductIsometry<T> {
    factors: Vec<Vec<Vec<T>>>,
}

fn identity_matrix<T: Real>(size: usize) -> Vec<Vec<T>> {
    (0..size)
        .map(|r| {
            (0..size)
                .map(|c| if r == c { T::one() } else { T::zero() })
                .collect()
        })
        .collect()
}

fn mat_vec<T: Real>(m: &[Vec<T>], v: &[T]) -> Vec<T> {
    m.iter().map(|row| hyp::euclid_dot(row, v)).collect()
}

fn mat_mul<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = a.len();
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| (0..n).fold(T::zero(), |acc, k| acc + a[r][k] * b[k][c]))
                .collect()
        })
        .collect()
}

impl<T: Real> ProductIsometry<T> {
    pub fn identity(dims: &[usize]) -> Self {
        Self {
            factors: dims.iter().map(|n| identity_matrix(n + 1)).collect(),
        }
    }

    /// Rotation by `angle` in the spatial plane `(a, b)` of factor `factor`
    /// (spatial indices start at 0). Fixes the basepoint.
    pub fn rotation(dims: &[usize], factor: usize, a: usize, b: usize, angle: T) -> Result<Self> {
        let mut iso = Self::identity(dims);
        let n = *dims
            .get(factor)
            .ok_or_else(|| Error::ShapeError("rotation factor out of range".into()))?;
        if a >= n || b >= n || a == b {
            return Err(Error::ShapeError("rotation plane out of range".into()));
        }
        let m = &mut iso.factors[factor];
        let (c, s) = (angle.cos(), angle.sin());
        m[a + 1][a + 1] = c;
        m[a + 1][b + 1] = -s;
        m[b + 1][a + 1] = s;
        m[b + 1][b + 1] = c;
        Ok(iso)
    }

    /// The transvection taking the basepoint to `x`, factor by factor.
    pub fn boost_to(x: &ProductPoint<T>) -> Self {
        let factors = x
            .factors()
            .iter()
            .map(|xi| {
                let size = xi.len();
                // columns are the images of the standard basis
                let cols: Vec<Vec<T>> = (0..size)
                    .map(|j| {
                        let mut e = vec![T::zero(); size];
                        e[j] = T::one();
                        hyp::boost_apply(xi, &e)
                    })
                    .collect();
                (0..size)
                    .map(|r| (0..size).map(|c| cols[c][r]).collect())
                    .collect()
            })
            .collect();
        Self { factors }
    }

    /// Point reflection through the basepoint in the factors selected by `mask`.
    pub fn negation(dims: &[usize], mask: u32) -> Self {
        let mut iso = Self::identity(dims);
        for (i, m) in iso.factors.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                for (r, row) in m.iter_mut().enumerate().skip(1) {
                    row[r] = -T::one();
                }
            }
        }
        iso
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| mat_mul(a, b))
                .collect(),
        }
    }

    pub fn apply_point(&self, x: &ProductPoint<T>) -> ProductPoint<T> {
        let factors = self
            .factors
            .iter()
            .zip(x.factors())
            .map(|(m, xi)| {
                let mut y = mat_vec(m, xi);
                hyp::renormalize(&mut y);
                y
            })
            .collect();
        ProductPoint::from_raw(factors)
    }

    /// Differential: tangent vectors map linearly.
    pub fn apply_tangent(&self, v: &TangentVector<T>) -> TangentVector<T> {
        let base = self.apply_point(v.base());
        let factors = self
            .factors
            .iter()
            .zip(v.factors())
            .map(|(m, vi)| mat_vec(m, vi))
            .collect();
        TangentVector::from_raw(base, factors)
    }

    pub fn apply_boundary(&self, theta: &FurstenbergPoint<T>) -> FurstenbergPoint<T> {
        let factors = self
            .factors
            .iter()
            .zip(theta.factors())
            .map(|(m, th)| {
                let img = hyp::lorentz_boundary_action(m, th);
                let norm = hyp::euclid_norm(&img);
                img.into_iter().map(|c| c / norm).collect()
            })
            .collect();
        FurstenbergPoint::from_raw(factors)
    }
}
