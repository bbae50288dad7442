use rayon::prelude::*;

use super::{orbit_bits, AtomicBoundaryMeasure, BoundaryAtom, Provenance};
use crate::error::{Error, Result};
use crate::geometry::busemann::factor_busemann;
use crate::geometry::hyperboloid as hyp;
use crate::geometry::{FurstenbergPoint, ProductPoint};
use crate::rng::{self, domain};
use crate::scalar::Real;

const DEFAULT_ESS_FRACTION: f64 = 0.01;

/// `ln dν_x/dν_p(θ) = -Σ h_i B_i(x_i, θ_i)` with `h_i = n_i - 1`.
///
/// The product of the factor Poisson kernels raised to the factor entropies;
/// `ν_x` grows toward the directions `x` points at.
pub fn ps_log_density<T: Real>(x: &ProductPoint<T>, theta: &FurstenbergPoint<T>) -> Result<T> {
    theta.check_shape(x)?;
    Ok(x.factors()
        .iter()
        .zip(theta.factors())
        .fold(T::zero(), |acc, (xi, ti)| {
            acc - T::from_usize_lossy(ti.len() - 1) * factor_busemann(xi, ti)
        }))
}

/// Uniform points on `Π S^{n_i - 1}` in antithetic orbits.
pub fn uniform_boundary_points(
    dims: &[usize],
    n: usize,
    seed: u64,
    domain_tag: u64,
) -> Result<Vec<FurstenbergPoint<f64>>> {
    let bits = orbit_bits(dims.len())?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|a| {
            let mut r = rng::stream(seed, domain_tag, a >> bits);
            let base: Vec<Vec<f64>> = dims.iter().map(|d| rng::unit_vector(&mut r, *d)).collect();
            FurstenbergPoint::from_raw(base).flipped((a & ((1 << bits) - 1)) as u32)
        })
        .collect())
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ParameterError("sample size must be at least 1".into()));
    }
    Ok(())
}

/// Importance sample of `ν_x`: uniform atoms weighted by `dν_x/dν_p`.
pub fn sample_ps(x: &ProductPoint<f64>, n: usize, seed: u64) -> Result<AtomicBoundaryMeasure> {
    check_count(n)?;
    let dims: Vec<usize> = x.dims();
    let thetas = uniform_boundary_points(&dims, n, seed, domain::PS_DIRECTIONS)?;
    let logs = thetas
        .par_iter()
        .map(|t| ps_log_density(x, t))
        .collect::<Result<Vec<f64>>>()?;
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let atoms = thetas
        .into_iter()
        .zip(&logs)
        .map(|(theta, l)| BoundaryAtom {
            theta,
            w: (l - shift).exp(),
        })
        .collect();
    let mut m = AtomicBoundaryMeasure::new(atoms, Provenance::PattersonSullivan { x: x.clone() })?
        .with_seed(seed);
    m.warn_if_degenerate(DEFAULT_ESS_FRACTION);
    Ok(m)
}

/// Image of a boundary direction under the boost taking the basepoint to `x`.
pub(crate) fn boost_boundary(x: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut null = Vec::with_capacity(theta.len() + 1);
    null.push(1.0);
    null.extend_from_slice(theta);
    let img = hyp::boost_apply(x, &null);
    let norm = hyp::euclid_norm(&img[1..]);
    img[1..].iter().map(|c| c / norm).collect()
}

/// Exact equal-weight sample of `ν_x = (L_x)_* ν_p`, where `L_x` is the
/// boost taking the basepoint to `x` and `ν_p` is uniform.
pub fn sample_ps_pushforward(x: &ProductPoint<f64>, n: usize, seed: u64) -> Result<AtomicBoundaryMeasure> {
    check_count(n)?;
    let thetas = uniform_boundary_points(&x.dims(), n, seed, domain::PS_DIRECTIONS)?;
    let atoms = thetas
        .into_par_iter()
        .map(|t| BoundaryAtom {
            theta: FurstenbergPoint::from_raw(
                x.factors()
                    .iter()
                    .zip(t.factors())
                    .map(|(xi, ti)| boost_boundary(xi, ti))
                    .collect(),
            ),
            w: 1.0,
        })
        .collect();
    Ok(AtomicBoundaryMeasure::new(atoms, Provenance::PattersonSullivan { x: x.clone() })?.with_seed(seed))
}

/// Monte Carlo estimate of `∫ dν_x/dν_p dν_p` (which is 1) and its standard
/// error, from `n` uniform directions. The error uses orbit means, which are
/// independent.
pub fn ps_total_mass(x: &ProductPoint<f64>, n: usize, seed: u64) -> Result<(f64, f64)> {
    check_count(n)?;
    let dims = x.dims();
    let orbit = 1usize << orbit_bits(dims.len())?;
    let thetas = uniform_boundary_points(&dims, n, seed, domain::PS_DIRECTIONS)?;
    let vals = thetas
        .par_iter()
        .map(|t| ps_log_density(x, t).map(f64::exp))
        .collect::<Result<Vec<f64>>>()?;
    let mean = vals.iter().sum::<f64>() / n as f64;
    let groups: Vec<f64> = vals
        .chunks(orbit)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let g = groups.len() as f64;
    let gm = groups.iter().sum::<f64>() / g;
    let var = groups.iter().map(|v| (v - gm) * (v - gm)).sum::<f64>() / (g - 1.0).max(1.0);
    Ok((mean, (var / g).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FactorSpec;

    fn h3h3_point(a: [f64; 3], b: [f64; 3]) -> ProductPoint<f64> {
        ProductPoint::from_spatial(&[a.to_vec(), b.to_vec()])
    }

    #[test]
    fn density_at_basepoint_is_zero() {
        let f = FactorSpec::real(3).unwrap();
        let p = ProductPoint::<f64>::basepoint(&[f, f]);
        let t = FurstenbergPoint::new(vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(ps_log_density(&p, &t).unwrap(), 0.0);
    }

    #[test]
    fn basepoint_sample_is_uniform() {
        let f = FactorSpec::real(3).unwrap();
        let p = ProductPoint::<f64>::basepoint(&[f, f]);
        let m = sample_ps(&p, 100, 3).unwrap();
        assert!(m.atoms().iter().all(|a| (a.w - 0.01).abs() < 1e-15));
        assert!(m.warnings().is_empty());
    }

    #[test]
    fn orbits_are_negations() {
        let pts = uniform_boundary_points(&[3, 4], 8, 1, domain::PS_DIRECTIONS).unwrap();
        assert_eq!(pts[1].factor(0)[0], -pts[0].factor(0)[0]);
        assert_eq!(pts[1].factor(1), pts[0].factor(1));
        assert_eq!(pts[3], pts[0].flipped(3));
        assert_ne!(pts[4], pts[0]);
    }

    #[test]
    fn pushforward_matches_density_in_mean() {
        // E_{ν_x}[f] from the exact sampler agrees with the weighted sampler
        let x = h3h3_point([0.8, 0.0, 0.0], [0.0, -0.5, 0.3]);
        let exact = sample_ps_pushforward(&x, 40_000, 5).unwrap();
        let weighted = sample_ps(&x, 40_000, 6).unwrap();
        let mean = |m: &AtomicBoundaryMeasure| -> f64 {
            m.atoms().iter().map(|a| a.w * a.theta.factor(0)[0]).sum()
        };
        assert!((mean(&exact) - mean(&weighted)).abs() < 0.02);
    }

    #[test]
    fn total_mass_is_one() {
        let x = h3h3_point([0.5, 0.2, 0.0], [0.1, 0.0, -0.4]);
        let (mass, err) = ps_total_mass(&x, 20_000, 2).unwrap();
        assert!((mass - 1.0).abs() < 4.0 * err.max(1e-3), "{mass} ± {err}");
    }
}
