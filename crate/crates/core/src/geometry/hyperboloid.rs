//! Single-factor real hyperbolic geometry in the hyperboloid model.
//!
//! A point of `H^n` is a vector `x ∈ R^{n+1}` with `<x,x> = -1`, `x[0] > 0`,
//! where `<a,b> = -a0 b0 + Σ ai bi` is the Minkowski pairing. Boundary
//! directions are unit vectors `θ ∈ S^{n-1}` and correspond to the null ray
//! spanned by `(1, θ)`.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[inline]
pub fn minkowski<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let spatial = a[1..]
        .iter()
        .zip(&b[1..])
        .fold(T::zero(), |acc, (x, y)| acc + *x * *y);
    spatial - a[0] * b[0]
}

#[inline]
pub fn euclid_dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

#[inline]
pub fn euclid_norm<T: Real>(a: &[T]) -> T {
    euclid_dot(a, a).sqrt()
}

/// The factor basepoint `(1, 0, …, 0)` of `H^dim`.
pub fn basepoint<T: Real>(dim: usize) -> Vec<T> {
    let mut p = vec![T::zero(); dim + 1];
    p[0] = T::one();
    p
}

/// Check the hyperboloid constraint and the upper sheet.
pub fn check_point<T: Real>(x: &[T], tol: f64) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidPoint("hyperboloid vector too short".into()));
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidPoint("non-finite coordinate".into()));
    }
    let q = minkowski(x, x) + T::one();
    // relative to the size of the coordinates
    let scale = T::one() + x[0] * x[0];
    if x[0] <= T::zero() || q.abs() > T::lit(tol) * scale {
        return Err(Error::InvalidPoint(format!(
            "<x,x> + 1 = {:e}, x0 = {}",
            q.to_f64_lossy(),
            x[0]
        )));
    }
    Ok(())
}

/// Recompute the time coordinate so that `x` lies exactly on the hyperboloid.
pub fn renormalize<T: Real>(x: &mut [T]) {
    let s = euclid_dot(&x[1..], &x[1..]);
    x[0] = (T::one() + s).sqrt();
}

/// Lift a spatial vector `xs ∈ R^n` to the hyperboloid.
pub fn lift<T: Real>(spatial: &[T]) -> Vec<T> {
    let mut x = Vec::with_capacity(spatial.len() + 1);
    x.push(T::zero());
    x.extend_from_slice(spatial);
    renormalize(&mut x);
    x
}

/// Hyperbolic distance, stable for nearby points.
pub fn distance<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    let pairing = -minkowski(x, y);
    let eps = T::lit(1e-9) * (T::one() + x[0] * y[0]);
    if pairing < T::one() - eps {
        return Err(Error::InvalidPoint(format!(
            "-<x,y> = {pairing} < 1: not both on the hyperboloid"
        )));
    }
    if pairing < T::lit(1.5) {
        // <x-y, x-y> = 4 sinh^2(d/2)
        let diff: Vec<T> = x.iter().zip(y).map(|(a, b)| *a - *b).collect();
        let q = minkowski(&diff, &diff).max(T::zero());
        Ok(T::lit(2.0) * (q.sqrt() * T::lit(0.5)).asinh())
    } else {
        Ok(pairing.acosh())
    }
}

/// Project an ambient vector onto the tangent space at `x`.
pub fn project_tangent<T: Real>(x: &[T], v: &[T]) -> Vec<T> {
    let c = minkowski(v, x);
    v.iter().zip(x).map(|(vi, xi)| *vi + c * *xi).collect()
}

/// Riemannian norm of a tangent vector (factor metric).
pub fn tangent_norm<T: Real>(v: &[T]) -> T {
    minkowski(v, v).max(T::zero()).sqrt()
}

/// `sinh(t)/t`, accurate near zero.
#[inline]
fn sinhc<T: Real>(t: T) -> T {
    if t.abs() < T::lit(1e-4) {
        T::one() + t * t / T::lit(6.0)
    } else {
        t.sinh() / t
    }
}

/// Exponential map of a single factor.
pub fn exp<T: Real>(x: &[T], v: &[T]) -> Vec<T> {
    let norm = tangent_norm(v);
    let c = norm.cosh();
    let s = sinhc(norm);
    let mut out: Vec<T> = x.iter().zip(v).map(|(xi, vi)| c * *xi + s * *vi).collect();
    renormalize(&mut out);
    out
}

/// Logarithm map of a single factor; `|log_x(y)| = d(x,y)`.
pub fn log<T: Real>(x: &[T], y: &[T]) -> Result<Vec<T>> {
    let d = distance(x, y)?;
    let pairing = minkowski(x, y);
    // w = y + <x,y> x is tangent at x with norm sinh d
    let w: Vec<T> = y.iter().zip(x).map(|(yi, xi)| *yi + pairing * *xi).collect();
    let w = project_tangent(x, &w);
    let scale = T::one() / sinhc(d);
    Ok(w.into_iter().map(|c| c * scale).collect())
}

/// The j-th vector (`1 ≤ j ≤ n`) of the orthonormal frame at `x` obtained by
/// boosting the standard frame at the basepoint.
pub fn frame_vector<T: Real>(x: &[T], j: usize) -> Vec<T> {
    debug_assert!(j >= 1 && j < x.len());
    let xj = x[j];
    let k = xj / (T::one() + x[0]);
    let mut e = Vec::with_capacity(x.len());
    e.push(xj);
    for (i, xi) in x[1..].iter().enumerate() {
        let delta = if i + 1 == j { T::one() } else { T::zero() };
        e.push(delta + *xi * k);
    }
    e
}

/// Coordinates of a tangent vector at `x` in the boost frame.
pub fn frame_coords<T: Real>(x: &[T], v: &[T]) -> Vec<T> {
    (1..x.len())
        .map(|j| minkowski(v, &frame_vector(x, j)))
        .collect()
}

/// Tangent vector at `x` with the given boost-frame coordinates.
pub fn from_frame_coords<T: Real>(x: &[T], coords: &[T]) -> Vec<T> {
    let mut v = vec![T::zero(); x.len()];
    for (j, c) in coords.iter().enumerate() {
        let e = frame_vector(x, j + 1);
        for (vi, ei) in v.iter_mut().zip(e) {
            *vi = *vi + *c * ei;
        }
    }
    v
}

/// Apply the boost taking the basepoint to `x` (an isometry of `H^n`).
pub fn boost_apply<T: Real>(x: &[T], w: &[T]) -> Vec<T> {
    let xs = &x[1..];
    let ws = &w[1..];
    let dot = euclid_dot(xs, ws);
    let k = dot / (T::one() + x[0]);
    let mut out = Vec::with_capacity(x.len());
    out.push(x[0] * w[0] + dot);
    for (xi, wi) in xs.iter().zip(ws) {
        out.push(*xi * w[0] + *wi + *xi * k);
    }
    out
}

/// Inverse of [`boost_apply`]: the boost taking `x` back to the basepoint.
pub fn boost_apply_inverse<T: Real>(x: &[T], w: &[T]) -> Vec<T> {
    let mut xr = x.to_vec();
    for c in xr[1..].iter_mut() {
        *c = -*c;
    }
    boost_apply(&xr, w)
}

/// Poincaré ball coordinates of a hyperboloid point.
pub fn to_ball<T: Real>(x: &[T]) -> Vec<T> {
    let denom = T::one() + x[0];
    x[1..].iter().map(|c| *c / denom).collect()
}

/// Hyperboloid point of a Poincaré ball point (`|b| < 1`).
pub fn from_ball<T: Real>(b: &[T]) -> Result<Vec<T>> {
    let r2 = euclid_dot(b, b);
    if r2 >= T::one() {
        return Err(Error::InvalidPoint("ball point outside the unit ball".into()));
    }
    let denom = T::one() - r2;
    let mut x = Vec::with_capacity(b.len() + 1);
    x.push((T::one() + r2) / denom);
    x.extend(b.iter().map(|c| T::lit(2.0) * *c / denom));
    Ok(x)
}

/// `-<x, (1,θ)>`, computed without cancellation for `x` far from the basepoint.
pub fn null_pairing<T: Real>(x: &[T], theta: &[T]) -> T {
    let xs = &x[1..];
    let r = euclid_norm(xs);
    if r == T::zero() {
        return x[0];
    }
    // x0 - xs·θ = (x0 - |xs|) + |xs - |xs| θ|^2 / (2|xs|)
    let gap = xs
        .iter()
        .zip(theta)
        .fold(T::zero(), |acc, (a, t)| {
            let d = *a - r * *t;
            acc + d * d
        });
    T::one() / (x[0] + r) + gap / (T::lit(2.0) * r)
}

/// Image of a boundary direction under a Lorentz matrix acting on `R^{n+1}`.
pub fn lorentz_boundary_action<T: Real>(matrix: &[Vec<T>], theta: &[T]) -> Vec<T> {
    let mut null = Vec::with_capacity(theta.len() + 1);
    null.push(T::one());
    null.extend_from_slice(theta);
    let image: Vec<T> = matrix.iter().map(|row| euclid_dot(row, &null)).collect();
    let scale = image[0];
    image[1..].iter().map(|c| *c / scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(spatial: &[f64]) -> Vec<f64> {
        lift(spatial)
    }

    #[test]
    fn distance_along_axis() {
        let p = basepoint::<f64>(3);
        let y = vec![1f64.cosh(), 1f64.sinh(), 0.0, 0.0];
        assert!((distance(&p, &y).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn distance_rejects_off_sheet() {
        let p = basepoint::<f64>(2);
        let bad = vec![-1.0, 0.0, 0.0];
        assert!(matches!(distance(&p, &bad), Err(Error::InvalidPoint(_))));
        assert!(check_point(&[2.0, 0.0, 0.0], 1e-10).is_err());
    }

    #[test]
    fn frame_is_orthonormal_and_tangent() {
        let x = point(&[0.3, -1.2, 2.0]);
        for i in 1..4 {
            let ei = frame_vector(&x, i);
            assert!(minkowski(&ei, &x).abs() < 1e-12);
            for j in 1..4 {
                let ej = frame_vector(&x, j);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((minkowski(&ei, &ej) - expect).abs() < 1e-12);
            }
        }
        let v = from_frame_coords(&x, &[0.1, 0.2, -0.3]);
        let c = frame_coords(&x, &v);
        assert!((c[0] - 0.1).abs() < 1e-12 && (c[2] + 0.3).abs() < 1e-12);
    }

    #[test]
    fn boost_maps_basepoint_and_inverts() {
        let x = point(&[0.5, 0.1, -0.7]);
        let p = basepoint::<f64>(3);
        let img = boost_apply(&x, &p);
        for (a, b) in img.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
        let y = point(&[-1.0, 2.0, 0.3]);
        let back = boost_apply_inverse(&x, &boost_apply(&x, &y));
        for (a, b) in back.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        // isometry
        let z = point(&[0.2, 0.2, 0.2]);
        let d0 = distance(&y, &z).unwrap();
        let d1 = distance(&boost_apply(&x, &y), &boost_apply(&x, &z)).unwrap();
        assert!((d0 - d1).abs() < 1e-12);
    }

    #[test]
    fn ball_roundtrip() {
        let x = point(&[1.5, -0.25, 0.75]);
        let back = from_ball(&to_ball(&x)).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(from_ball(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn exp_log_small_vectors() {
        let x = point(&[0.4, 0.0, -0.2]);
        let v = from_frame_coords(&x, &[1e-7, -2e-7, 3e-8]);
        let y = exp(&x, &v);
        let w = log(&x, &y).unwrap();
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn null_pairing_matches_naive() {
        let x = point(&[0.3, 0.4, -0.1]);
        let th = [0.6, 0.0, 0.8];
        let naive = x[0] - euclid_dot(&x[1..], &th);
        assert!((null_pairing(&x, &th) - naive).abs() < 1e-14);
    }
}
