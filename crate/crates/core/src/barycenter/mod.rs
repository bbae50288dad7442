//! The Busemann-integral objective `B_{s,y}`, its minimizer, the natural map
//! `F_s` and its finite-difference Jacobian.
//!
//! All objectives use the weighted Busemann function of `g_min`; gradients
//! and Hessians are expressed in the `g_min`-orthonormal boost frame.

mod jacobian;
mod localization;
mod natural;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use jacobian::{jacobian_fd, jacobian_richardson, JacobianReport, RichardsonCheck};
pub use localization::{
    alignment, localization_check, localization_scenario, LocalizationScenario, ScenarioOptions,
};
pub use natural::{natural_map, natural_map_with, NaturalMapConfig, NaturalMapResult};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::busemann::{factor_busemann, factor_busemann_frame_gradient};
use crate::geometry::{exp_map, ProductPoint, ScaledProductMetric, TangentVector};
use crate::measures::AtomicBoundaryMeasure;

/// Value, frame gradient and frame Hessian of the objective at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

fn check(metric: &ScaledProductMetric<f64>, x: &ProductPoint<f64>, sigma: &AtomicBoundaryMeasure) -> Result<()> {
    metric.require_real()?;
    metric.require_weights()?;
    x.check_shape(metric.factors())?;
    if x.dims() != sigma.dims() {
        return Err(Error::ShapeError("measure does not match point".into()));
    }
    Ok(())
}

fn value_unchecked(metric: &ScaledProductMetric<f64>, x: &ProductPoint<f64>, sigma: &AtomicBoundaryMeasure) -> f64 {
    let weights = metric.centroid_weights().unwrap_or_default();
    let coef: Vec<f64> = weights.iter().zip(metric.scales()).map(|(c, a)| c * a).collect();
    sigma
        .atoms()
        .iter()
        .map(|atom| {
            atom.w
                * x.factors()
                    .iter()
                    .zip(atom.theta.factors())
                    .zip(&coef)
                    .map(|((xi, ti), k)| k * factor_busemann(xi, ti))
                    .sum::<f64>()
        })
        .sum()
}

/// `B_{s,y}(x) = ∫ B_0(x, θ) dσ(θ)`.
pub fn objective(metric_min: &ScaledProductMetric<f64>, x: &ProductPoint<f64>, sigma: &AtomicBoundaryMeasure) -> Result<f64> {
    check(metric_min, x, sigma)?;
    Ok(value_unchecked(metric_min, x, sigma))
}

/// The objective built from Busemann functions normalized at `origin`
/// instead of the basepoint; it differs from [`objective`] by a constant.
pub fn objective_with_basepoint(
    metric_min: &ScaledProductMetric<f64>,
    origin: &ProductPoint<f64>,
    x: &ProductPoint<f64>,
    sigma: &AtomicBoundaryMeasure,
) -> Result<f64> {
    check(metric_min, x, sigma)?;
    check(metric_min, origin, sigma)?;
    let weights = metric_min.require_weights()?;
    Ok(sigma
        .atoms()
        .iter()
        .map(|atom| {
            atom.w
                * x.factors()
                    .iter()
                    .zip(origin.factors())
                    .zip(atom.theta.factors())
                    .enumerate()
                    .map(|(i, ((xi, oi), ti))| {
                        weights[i]
                            * metric_min.scales()[i]
                            * crate::geometry::busemann::busemann_between(oi, xi, ti)
                    })
                    .sum::<f64>()
        })
        .sum())
}

/// Value, gradient and Hessian of the objective in the `g_min` frame.
pub fn objective_jet(
    metric_min: &ScaledProductMetric<f64>,
    x: &ProductPoint<f64>,
    sigma: &AtomicBoundaryMeasure,
) -> Result<ObjectiveJet> {
    check(metric_min, x, sigma)?;
    let weights = metric_min.require_weights()?;
    let dims = x.dims();
    let n: usize = dims.iter().sum();
    let mut value = 0.0;
    let mut gradient = vec![0.0; n];
    // Σ w g gᵀ per factor
    let mut outer: Vec<DMatrix<f64>> = dims.iter().map(|d| DMatrix::zeros(*d, *d)).collect();
    let mut mass = 0.0;
    for atom in sigma.atoms() {
        let w = atom.w;
        mass += w;
        let mut off = 0;
        for (i, (xi, ti)) in x.factors().iter().zip(atom.theta.factors()).enumerate() {
            let (c, a) = (weights[i], metric_min.scales()[i]);
            value += w * c * a * factor_busemann(xi, ti);
            let g = factor_busemann_frame_gradient(xi, ti);
            for (r, gr) in g.iter().enumerate() {
                gradient[off + r] += w * c * gr;
                for (col, gc) in g.iter().enumerate() {
                    outer[i][(r, col)] += w * gr * gc;
                }
            }
            off += dims[i];
        }
    }
    let mut hessian = DMatrix::zeros(n, n);
    let mut off = 0;
    for (i, d) in dims.iter().enumerate() {
        let k = weights[i] / metric_min.scales()[i];
        let block = (DMatrix::identity(*d, *d) * mass - &outer[i]) * k;
        hessian.view_mut((off, off), (*d, *d)).copy_from(&block);
        off += d;
    }
    Ok(ObjectiveJet {
        value,
        gradient,
        hessian,
    })
}

/// Solver settings for [`barycenter`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarycenterOptions {
    /// Stop when the `g_min` gradient norm is below this.
    pub tol: f64,
    /// Hessian eigenvalues are floored here when forming Newton steps.
    pub hessian_floor: f64,
    /// Smallest Hessian eigenvalue accepted at the solution.
    pub degenerate_hessian: f64,
    pub max_iterations: usize,
}

impl From<&Tolerances> for BarycenterOptions {
    fn from(t: &Tolerances) -> Self {
        Self {
            tol: t.barycenter,
            hessian_floor: t.hessian_floor,
            degenerate_hessian: t.degenerate_hessian,
            max_iterations: t.max_newton_iterations,
        }
    }
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        (&Tolerances::default()).into()
    }
}

/// Minimizer of the objective, with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterResult {
    pub point: ProductPoint<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub hess_min_eig: f64,
}

/// Each factor marginal must charge two directions that are not equal or
/// antipodal, and no direction may carry half the mass.
fn check_spread(sigma: &AtomicBoundaryMeasure) -> Result<()> {
    let charged: Vec<_> = sigma.atoms().iter().filter(|a| a.w > 0.0).collect();
    for i in 0..sigma.dims().len() {
        let first = charged[0].theta.factor(i);
        let spread = charged.iter().any(|a| {
            let dot: f64 = a.theta.factor(i).iter().zip(first).map(|(u, v)| u * v).sum();
            dot.abs() < 1.0 - 1e-12
        });
        if !spread {
            return Err(Error::DegenerateMeasure(format!(
                "factor {i}: all atoms lie on one line through the center"
            )));
        }
        // a direction carrying half the mass pulls the minimizer to infinity
        let total: f64 = charged.iter().map(|a| a.w).sum();
        let heaviest = charged.iter().max_by(|a, b| a.w.total_cmp(&b.w)).unwrap().theta.factor(i);
        let on_heaviest: f64 = charged
            .iter()
            .filter(|a| a.theta.factor(i).iter().zip(heaviest).map(|(u, v)| u * v).sum::<f64>() > 1.0 - 1e-12)
            .map(|a| a.w)
            .sum();
        if on_heaviest >= 0.5 * total {
            return Err(Error::DegenerateMeasure(format!(
                "factor {i}: one direction carries {:.3} of the mass",
                on_heaviest / total
            )));
        }
    }
    Ok(())
}

fn step_to(metric: &ScaledProductMetric<f64>, x: &ProductPoint<f64>, coords: &[f64]) -> Result<ProductPoint<f64>> {
    let v = TangentVector::from_frame_coords(metric, x.clone(), coords)?;
    exp_map(metric, x, &v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Backtracking along `dir`; `None` if no Armijo point is found.
fn line_search(
    metric: &ScaledProductMetric<f64>,
    x: &ProductPoint<f64>,
    sigma: &AtomicBoundaryMeasure,
    f0: f64,
    slope: f64,
    dir: &[f64],
) -> Result<Option<ProductPoint<f64>>> {
    let slack = 8.0 * f64::EPSILON * (1.0 + f0.abs());
    let mut t = 1.0;
    for _ in 0..60 {
        let scaled: Vec<f64> = dir.iter().map(|d| d * t).collect();
        let trial = step_to(metric, x, &scaled)?;
        let f = value_unchecked(metric, &trial, sigma);
        if f <= f0 + 1e-4 * t * slope + slack {
            return Ok(Some(trial));
        }
        t *= 0.5;
    }
    Ok(None)
}

/// Riemannian Newton method with floored Hessian eigenvalues, Armijo
/// backtracking and a gradient-descent fallback.
pub fn barycenter(
    metric_min: &ScaledProductMetric<f64>,
    sigma: &AtomicBoundaryMeasure,
    init: &ProductPoint<f64>,
    opts: &BarycenterOptions,
) -> Result<BarycenterResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::ParameterError("tolerance must be positive".into()));
    }
    check(metric_min, init, sigma)?;
    check_spread(sigma)?;
    let mut x = init.clone();
    let mut grad_norm = f64::INFINITY;
    for it in 0..=opts.max_iterations {
        let jet = objective_jet(metric_min, &x, sigma)?;
        grad_norm = dot(&jet.gradient, &jet.gradient).sqrt();
        let eig = SymmetricEigen::new(jet.hessian.clone());
        let min_eig = eig.eigenvalues.min();
        if grad_norm < opts.tol {
            if min_eig < opts.degenerate_hessian {
                return Err(Error::DegenerateMeasure(format!(
                    "Hessian eigenvalue {min_eig:e} at the critical point"
                )));
            }
            return Ok(BarycenterResult {
                point: x,
                grad_norm,
                iterations: it,
                hess_min_eig: min_eig,
            });
        }
        if it == opts.max_iterations {
            break;
        }
        let g = DVector::from_column_slice(&jet.gradient);
        let coeffs = eig.eigenvectors.transpose() * &g;
        let scaled = DVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(eig.eigenvalues.iter())
                .map(|(c, l)| -c / l.max(opts.hessian_floor)),
        );
        let newton: Vec<f64> = (&eig.eigenvectors * scaled).iter().copied().collect();
        let mut next = match line_search(metric_min, &x, sigma, jet.value, dot(&newton, &jet.gradient), &newton)? {
            Some(p) => Some(p),
            None => {
                let descent: Vec<f64> = jet.gradient.iter().map(|c| -c).collect();
                line_search(metric_min, &x, sigma, jet.value, -grad_norm * grad_norm, &descent)?
            }
        };
        if next.is_none() {
            // objective differences are below round-off; judge the full step by its gradient
            let trial = step_to(metric_min, &x, &newton)?;
            let g = objective_jet(metric_min, &trial, sigma)?.gradient;
            if dot(&g, &g).sqrt() < grad_norm {
                next = Some(trial);
            }
        }
        match next {
            Some(p) => x = p,
            None => break,
        }
        if x.factors().iter().any(|xi| !(xi[0] < 1e12)) {
            break;
        }
    }
    Err(Error::Nonconvergence {
        iterations: opts.max_iterations,
        residual: grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{product_distance, FactorSpec, FurstenbergPoint};
    use crate::measures::{sample_ps, BoundaryAtom, Provenance};

    fn g_min() -> ScaledProductMetric<f64> {
        let f3 = FactorSpec::real(3).unwrap();
        let f4 = FactorSpec::real(4).unwrap();
        ScaledProductMetric::optimal(vec![f3, f4]).unwrap()
    }

    fn theta(a: &[f64], b: &[f64]) -> FurstenbergPoint<f64> {
        FurstenbergPoint::normalized(vec![a.to_vec(), b.to_vec()]).unwrap()
    }

    #[test]
    fn dirac_objective_is_busemann() {
        let m = g_min();
        let x = ProductPoint::from_spatial(&[vec![0.3, 0.1, 0.0], vec![0.0, 0.2, -0.4, 0.5]]);
        let t = theta(&[1.0, 2.0, 0.5], &[0.0, 1.0, 0.0, 1.0]);
        let sigma = AtomicBoundaryMeasure::dirac(t.clone());
        let direct = crate::geometry::weighted_busemann(&m, &x, &t).unwrap();
        assert_eq!(objective(&m, &x, &sigma).unwrap(), direct);
    }

    #[test]
    fn symmetric_measure_fixes_basepoint() {
        let m = g_min();
        let p = ProductPoint::basepoint(m.factors());
        let sigma = sample_ps(&p, 2000, 1).unwrap();
        let init = ProductPoint::from_spatial(&[vec![0.5, 0.0, 0.2], vec![0.1, 0.0, 0.0, -0.3]]);
        let r = barycenter(&m, &sigma, &init, &BarycenterOptions::default()).unwrap();
        assert!(product_distance(&m, &r.point, &p).unwrap() < 1e-8);
        assert!(r.hess_min_eig > 0.0);
    }

    #[test]
    fn antipodal_pair_is_degenerate() {
        let m = g_min();
        let t = theta(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]);
        let sigma = AtomicBoundaryMeasure::new(
            vec![
                BoundaryAtom { theta: t.clone(), w: 0.5 },
                BoundaryAtom { theta: t.flipped(3), w: 0.5 },
            ],
            Provenance::Custom,
        )
        .unwrap();
        let p = ProductPoint::basepoint(m.factors());
        assert!(matches!(
            barycenter(&m, &sigma, &p, &BarycenterOptions::default()),
            Err(Error::DegenerateMeasure(_))
        ));
    }

    #[test]
    fn heavy_direction_is_degenerate() {
        let m = g_min();
        let p = ProductPoint::basepoint(m.factors());
        let spread = sample_ps(&p, 40, 3).unwrap();
        let heavy = AtomicBoundaryMeasure::dirac(theta(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 0.0]));
        let sigma = AtomicBoundaryMeasure::mixture(&[(0.4, &spread), (0.6, &heavy)]).unwrap();
        assert!(matches!(
            barycenter(&m, &sigma, &p, &BarycenterOptions::default()),
            Err(Error::DegenerateMeasure(_))
        ));
        let sigma = AtomicBoundaryMeasure::mixture(&[(0.6, &spread), (0.4, &heavy)]).unwrap();
        assert!(barycenter(&m, &sigma, &p, &BarycenterOptions::default()).is_ok());
    }

    #[test]
    fn basepoint_change_shifts_objective_by_constant() {
        let m = g_min();
        let p = ProductPoint::basepoint(m.factors());
        let sigma = sample_ps(&p, 50, 2).unwrap();
        let o = ProductPoint::from_spatial(&[vec![1.0, 0.0, 0.2], vec![0.1, 0.5, 0.0, -0.3]]);
        let xs = [
            ProductPoint::from_spatial(&[vec![0.0, 0.3, 0.0], vec![0.2, 0.0, 0.0, 0.0]]),
            ProductPoint::from_spatial(&[vec![-1.0, 0.0, 2.0], vec![0.0, 0.0, 0.7, 0.0]]),
        ];
        let diffs: Vec<f64> = xs
            .iter()
            .map(|x| {
                objective_with_basepoint(&m, &o, x, &sigma).unwrap() - objective(&m, x, &sigma).unwrap()
            })
            .collect();
        assert!((diffs[0] - diffs[1]).abs() < 1e-12);
    }
}
