use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FactorSpec;
use crate::scalar::Real;

/// Result of the numeric constrained minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericOptimum<T> {
    pub beta: Vec<T>,
    pub h: T,
    /// Projected gradient norm divided by the gradient norm.
    pub kkt_residual: T,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 500;

/// Minimize `h(g_β)²` over `Σ n_i ln β_i = 0` by equality-constrained Newton
/// in `u_i = ln β_i`, where the objective `Σ h_i² e^{-2u_i}` is strictly
/// convex and the constraint is linear. Independent of the closed form.
pub fn numeric_optimal_scales<T: Real>(
    factors: &[FactorSpec],
    tol: T,
) -> Result<NumericOptimum<T>> {
    if !(tol > T::zero()) {
        return Err(Error::ParameterError("tolerance must be positive".into()));
    }
    if factors.is_empty() {
        return Err(Error::ConfigError("no factors".into()));
    }
    let h2: Vec<T> = factors
        .iter()
        .map(|f| T::from_usize_lossy(f.entropy() * f.entropy()))
        .collect();
    let dims: Vec<T> = factors.iter().map(|f| T::from_usize_lossy(f.n())).collect();
    let dims_sq = dims.iter().fold(T::zero(), |a, n| a + *n * *n);
    let objective = |u: &[T]| {
        u.iter()
            .zip(&h2)
            .fold(T::zero(), |a, (ui, hi)| a + *hi * (-(T::lit(2.0)) * *ui).exp())
    };

    let mut u = vec![T::zero(); factors.len()];
    let mut residual = T::infinity();
    for it in 0..MAX_ITERATIONS {
        let grad: Vec<T> = u
            .iter()
            .zip(&h2)
            .map(|(ui, hi)| -T::lit(2.0) * *hi * (-T::lit(2.0) * *ui).exp())
            .collect();
        let hess: Vec<T> = u
            .iter()
            .zip(&h2)
            .map(|(ui, hi)| T::lit(4.0) * *hi * (-T::lit(2.0) * *ui).exp())
            .collect();
        // KKT residual: gradient component tangent to the constraint plane,
        // relative to the gradient norm
        let gnorm = grad.iter().fold(T::zero(), |a, g| a + *g * *g).sqrt();
        let gn = grad.iter().zip(&dims).fold(T::zero(), |a, (g, n)| a + *g * *n);
        residual = grad
            .iter()
            .zip(&dims)
            .fold(T::zero(), |a, (g, n)| {
                let r = *g - gn / dims_sq * *n;
                a + r * r
            })
            .sqrt()
            / gnorm;
        if residual < tol {
            let beta: Vec<T> = u.iter().map(|ui| ui.exp()).collect();
            return Ok(NumericOptimum {
                h: objective(&u).sqrt(),
                beta,
                kkt_residual: residual,
                iterations: it,
            });
        }
        // δ = -H⁻¹(g + λ n) with n·δ = 0
        let n_hinv_g = dims
            .iter()
            .zip(grad.iter().zip(&hess))
            .fold(T::zero(), |a, (n, (g, h))| a + *n * *g / *h);
        let n_hinv_n = dims
            .iter()
            .zip(&hess)
            .fold(T::zero(), |a, (n, h)| a + *n * *n / *h);
        let lambda = -n_hinv_g / n_hinv_n;
        let step: Vec<T> = grad
            .iter()
            .zip(&hess)
            .zip(&dims)
            .map(|((g, h), n)| -(*g + lambda * *n) / *h)
            .collect();
        // backtracking on the objective
        let f0 = objective(&u);
        let slope = step.iter().zip(&grad).fold(T::zero(), |a, (s, g)| a + *s * *g);
        let noise = T::lit(16.0) * T::epsilon() * f0;
        let mut t = T::one();
        loop {
            let trial: Vec<T> = u.iter().zip(&step).map(|(ui, si)| *ui + t * *si).collect();
            if objective(&trial) <= f0 + T::lit(1e-4) * t * slope + noise || t < T::lit(1e-12) {
                u = trial;
                break;
            }
            t = t * T::lit(0.5);
        }
    }
    Err(Error::Nonconvergence {
        iterations: MAX_ITERATIONS,
        residual: residual.to_f64_lossy(),
    })
}
