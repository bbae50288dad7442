//! Busemann functions of real hyperbolic factors and their weighted sum on
//! the product.
//!
//! Conventions: `B(p, x, θ) = lim_{t→∞} d(x, γ(t)) - t` with `γ` the unit
//! speed ray from the basepoint `p` toward `θ`. In the hyperboloid model this
//! is `ln(-<x, (1,θ)>)`; in the ball model `ln(|b - θ|² / (1 - |b|²))`. The
//! gradient is the negated unit vector `v_(x,θ)` pointing at `θ`, and the
//! Hessian is `I - ∇B ⊗ ∇B` on the tangent space.

use super::hyperboloid as hyp;
use super::metric::ScaledProductMetric;
use super::point::{FurstenbergPoint, ProductPoint, TangentVector};
use crate::error::Result;
use crate::scalar::Real;

/// Basepoint-normalized factor Busemann function `B(p, x, θ)`.
#[inline]
pub fn factor_busemann<T: Real>(x: &[T], theta: &[T]) -> T {
    hyp::null_pairing(x, theta).ln()
}

/// The same function evaluated from Poincaré ball coordinates.
pub fn factor_busemann_ball<T: Real>(b: &[T], theta: &[T]) -> T {
    let gap = b
        .iter()
        .zip(theta)
        .fold(T::zero(), |a, (bi, ti)| a + (*bi - *ti) * (*bi - *ti));
    let r2 = hyp::euclid_dot(b, b);
    (gap / (T::one() - r2)).ln()
}

/// `B(x, y, θ)`: Busemann function with basepoint `x` evaluated at `y`.
pub fn busemann_between<T: Real>(x: &[T], y: &[T], theta: &[T]) -> T {
    (hyp::null_pairing(y, theta) / hyp::null_pairing(x, theta)).ln()
}

/// `d(x, γ(t)) - t` for the ray `γ` from `from` toward `θ`. Converges to
/// `B(from, x, θ)` as `t → ∞`; kept as an independent check of the closed form.
pub fn busemann_by_limit<T: Real>(from: &[T], x: &[T], theta: &[T], t: T) -> Result<T> {
    let u = direction_to(from, theta);
    let ray: Vec<T> = from
        .iter()
        .zip(&u)
        .map(|(f, ui)| t.cosh() * *f + t.sinh() * *ui)
        .collect();
    Ok(hyp::distance(x, &ray)? - t)
}

/// The unit tangent vector at `x` pointing toward `θ`.
pub fn direction_to<T: Real>(x: &[T], theta: &[T]) -> Vec<T> {
    let q = hyp::null_pairing(x, theta);
    let mut u = Vec::with_capacity(x.len());
    u.push(T::one() / q - x[0]);
    for (xi, ti) in x[1..].iter().zip(theta) {
        u.push(*ti / q - *xi);
    }
    hyp::project_tangent(x, &u)
}

/// Gradient of `B(p, ·, θ)` at `x` as an ambient tangent vector (unit length).
pub fn factor_busemann_gradient<T: Real>(x: &[T], theta: &[T]) -> Vec<T> {
    direction_to(x, theta).into_iter().map(|c| -c).collect()
}

/// Gradient of `B(p, ·, θ)` in the boost frame at `x`.
pub fn factor_busemann_frame_gradient<T: Real>(x: &[T], theta: &[T]) -> Vec<T> {
    let q = hyp::null_pairing(x, theta);
    let xs = &x[1..];
    let k = hyp::euclid_dot(theta, xs) / (T::one() + x[0]);
    xs.iter()
        .zip(theta)
        .map(|(xj, tj)| -(*tj - *xj + k * *xj) / q)
        .collect()
}

/// Symmetric block-diagonal operator, one dense row-major block per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHessian<T> {
    blocks: Vec<(usize, Vec<T>)>,
}

impl<T: Real> BlockHessian<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&n| (n, vec![T::zero(); n * n])).collect(),
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, &[T])> {
        self.blocks.iter().map(|(n, b)| (*n, b.as_slice()))
    }

    pub fn block(&self, i: usize) -> &[T] {
        &self.blocks[i].1
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|(n, _)| n).sum()
    }

    /// Add `scale · (I - g gᵀ)` to block `i`.
    pub(crate) fn add_projector(&mut self, i: usize, scale: T, g: &[T]) {
        let (n, b) = &mut self.blocks[i];
        for r in 0..*n {
            for c in 0..*n {
                let id = if r == c { T::one() } else { T::zero() };
                b[r * *n + c] = b[r * *n + c] + scale * (id - g[r] * g[c]);
            }
        }
    }

    /// Dense `n × n` matrix, rows as vectors.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dimension();
        let mut out = vec![vec![T::zero(); n]; n];
        let mut off = 0;
        for (m, b) in &self.blocks {
            for r in 0..*m {
                for c in 0..*m {
                    out[off + r][off + c] = b[r * m + c];
                }
            }
            off += m;
        }
        out
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); v.len()];
        let mut off = 0;
        for (m, b) in &self.blocks {
            for r in 0..*m {
                out[off + r] = (0..*m).fold(T::zero(), |a, c| a + b[r * m + c] * v[off + c]);
            }
            off += m;
        }
        out
    }
}

fn check_inputs<T: Real>(
    metric: &ScaledProductMetric<T>,
    x: &ProductPoint<T>,
    theta: &FurstenbergPoint<T>,
) -> Result<()> {
    metric.require_real()?;
    x.check_shape(metric.factors())?;
    theta.check_shape(x)
}

/// `B_0(x, θ) = Σ c_i α_i B_i(x_i, θ_i)`, the Busemann function of the
/// product metric (scales `α_i`) toward the Furstenberg point `θ`.
pub fn weighted_busemann<T: Real>(
    metric: &ScaledProductMetric<T>,
    x: &ProductPoint<T>,
    theta: &FurstenbergPoint<T>,
) -> Result<T> {
    let weights = metric.require_weights()?;
    check_inputs(metric, x, theta)?;
    Ok(x.factors()
        .iter()
        .zip(theta.factors())
        .zip(weights.iter().zip(metric.scales()))
        .fold(T::zero(), |acc, ((xi, ti), (c, a))| {
            acc + *c * *a * factor_busemann(xi, ti)
        }))
}

/// Metric gradient of [`weighted_busemann`]; factor `i` is `(c_i/α_i) ∇B_i`.
pub fn weighted_busemann_gradient<T: Real>(
    metric: &ScaledProductMetric<T>,
    x: &ProductPoint<T>,
    theta: &FurstenbergPoint<T>,
) -> Result<TangentVector<T>> {
    let weights = metric.require_weights()?;
    check_inputs(metric, x, theta)?;
    let factors = x
        .factors()
        .iter()
        .zip(theta.factors())
        .zip(weights.iter().zip(metric.scales()))
        .map(|((xi, ti), (c, a))| {
            factor_busemann_gradient(xi, ti)
                .into_iter()
                .map(|g| g * *c / *a)
                .collect()
        })
        .collect();
    Ok(TangentVector::from_raw(x.clone(), factors))
}

/// Riemannian Hessian of [`weighted_busemann`] in the frame orthonormal for
/// `metric`: block `i` is `(c_i/α_i)(I - g_i g_iᵀ)` with `g_i` the unit
/// factor gradient.
pub fn weighted_busemann_hessian<T: Real>(
    metric: &ScaledProductMetric<T>,
    x: &ProductPoint<T>,
    theta: &FurstenbergPoint<T>,
) -> Result<BlockHessian<T>> {
    let weights = metric.require_weights()?;
    check_inputs(metric, x, theta)?;
    let mut h = BlockHessian::zeros(&x.dims());
    for (i, (xi, ti)) in x.factors().iter().zip(theta.factors()).enumerate() {
        let g = factor_busemann_frame_gradient(xi, ti);
        h.add_projector(i, weights[i] / metric.scales()[i], &g);
    }
    Ok(h)
}

/// Value, frame gradient and frame Hessian of [`weighted_busemann`] in one pass.
pub fn weighted_busemann_jet<T: Real>(
    metric: &ScaledProductMetric<T>,
    x: &ProductPoint<T>,
    theta: &FurstenbergPoint<T>,
) -> Result<(T, Vec<T>, BlockHessian<T>)> {
    let weights = metric.require_weights()?;
    check_inputs(metric, x, theta)?;
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(x.dimension());
    let mut hess = BlockHessian::zeros(&x.dims());
    for (i, (xi, ti)) in x.factors().iter().zip(theta.factors()).enumerate() {
        let (c, a) = (weights[i], metric.scales()[i]);
        value = value + c * a * factor_busemann(xi, ti);
        let g = factor_busemann_frame_gradient(xi, ti);
        grad.extend(g.iter().map(|gj| *gj * c));
        hess.add_projector(i, c / a, &g);
    }
    Ok((value, grad, hess))
}
