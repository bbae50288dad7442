use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::natural::{natural_map, NaturalMapConfig, NaturalMapResult};
use crate::entropy::{optimal_scales, product_entropy};
use crate::error::{Error, Result};
use crate::geometry::{exp_map, log_map, ProductPoint, ScaledProductMetric, TangentVector};

/// Finite-difference differential of `F_s` at `y` and the determinant bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    /// Row-major `n×n` matrix from a `g_β`-orthonormal frame at `y` to a
    /// `g_min`-orthonormal frame at `F_s(y)`.
    pub differential: Vec<Vec<f64>>,
    pub jac_det: f64,
    /// `(s / h_min)^n`.
    pub bound: f64,
    /// `|jac_det| / bound`.
    pub ratio: f64,
    /// `‖DᵀD - det(DᵀD)^{1/n} I‖_F`.
    pub homothety_deviation: f64,
    pub violation: bool,
    /// Smallest ESS of the interior and boundary samples over the stencil.
    pub ess_min: f64,
    pub eps: f64,
    pub s: f64,
    pub h_min: f64,
}

/// Reports at `ε` and `ε/2` and the relative change of the determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichardsonCheck {
    pub coarse: JacobianReport,
    pub fine: JacobianReport,
    pub relative_difference: f64,
}

fn stencil_point(
    metric_beta: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    coord: usize,
    step: f64,
) -> Result<ProductPoint<f64>> {
    let mut e = vec![0.0; y.dimension()];
    e[coord] = step;
    let v = TangentVector::from_frame_coords(metric_beta, y.clone(), &e)?;
    exp_map(metric_beta, y, &v)
}

fn solve_at(
    metric_beta: &ScaledProductMetric<f64>,
    point: Result<ProductPoint<f64>>,
    s: f64,
    config: &NaturalMapConfig,
    index: usize,
) -> Result<NaturalMapResult> {
    point
        .and_then(|p| natural_map(metric_beta, &p, s, config))
        .map_err(|e| Error::Stencil {
            index,
            source: Box::new(e),
        })
}

/// `±ε` evaluations along each frame direction; index `2c+1` is `+`, `2c+2` is `-`.
fn side_points(
    metric_beta: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    eps: f64,
    config: &NaturalMapConfig,
) -> Result<Vec<NaturalMapResult>> {
    let n = y.dimension();
    (0..2 * n)
        .into_par_iter()
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let p = stencil_point(metric_beta, y, k / 2, sign * eps);
            solve_at(metric_beta, p, s, config, k + 1)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    g_min: &ScaledProductMetric<f64>,
    center: &NaturalMapResult,
    sides: &[NaturalMapResult],
    s: f64,
    eps: f64,
    h_min: f64,
    slack: f64,
) -> Result<JacobianReport> {
    let f0 = center.point();
    let n = f0.dimension();
    let mut d = DMatrix::zeros(n, n);
    for c in 0..n {
        let plus = log_map(g_min, f0, sides[2 * c].point())?.frame_coords(g_min);
        let minus = log_map(g_min, f0, sides[2 * c + 1].point())?.frame_coords(g_min);
        for r in 0..n {
            d[(r, c)] = (plus[r] - minus[r]) / (2.0 * eps);
        }
    }
    let jac_det = d.determinant();
    let bound = (s / h_min).powi(n as i32);
    let gram = d.transpose() * &d;
    let scale = jac_det.abs().powf(2.0 / n as f64);
    let homothety_deviation = (gram - DMatrix::identity(n, n) * scale).norm();
    let ess_min = std::iter::once(center)
        .chain(sides)
        .flat_map(|r| [r.mu_ess, r.sigma_ess])
        .fold(f64::INFINITY, f64::min);
    Ok(JacobianReport {
        differential: d.row_iter().map(|row| row.iter().copied().collect()).collect(),
        jac_det,
        bound,
        ratio: jac_det.abs() / bound,
        homothety_deviation,
        violation: jac_det.abs() > bound * (1.0 + slack),
        ess_min,
        eps,
        s,
        h_min,
    })
}

fn setup(metric_beta: &ScaledProductMetric<f64>, s: f64, eps: f64) -> Result<(ScaledProductMetric<f64>, f64)> {
    if !(eps > 0.0) {
        return Err(Error::ParameterError("eps must be positive".into()));
    }
    let h = product_entropy(metric_beta);
    if !(s > h) {
        return Err(Error::ParameterError(format!(
            "s must exceed h(g_beta) = {h}, got {s}"
        )));
    }
    let h_min = optimal_scales::<f64>(metric_beta.factors())?.h_min;
    Ok((ScaledProductMetric::optimal(metric_beta.factors().to_vec())?, h_min))
}

/// Central-difference differential of `F_s` at `y` with step `eps`.
///
/// Every stencil point uses the same seed, so the samples at neighbouring
/// points are images of the same draws. `slack` is the relative tolerance
/// before `|jac_det| > bound` counts as a violation.
pub fn jacobian_fd(
    metric_beta: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    eps: f64,
    config: &NaturalMapConfig,
    slack: f64,
) -> Result<JacobianReport> {
    let (g_min, h_min) = setup(metric_beta, s, eps)?;
    let center = solve_at(metric_beta, Ok(y.clone()), s, config, 0)?;
    let sides = side_points(metric_beta, y, s, eps, config)?;
    assemble(&g_min, &center, &sides, s, eps, h_min, slack)
}

/// [`jacobian_fd`] at `eps` and `eps / 2`, sharing the center evaluation.
pub fn jacobian_richardson(
    metric_beta: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    eps: f64,
    config: &NaturalMapConfig,
    slack: f64,
) -> Result<RichardsonCheck> {
    let (g_min, h_min) = setup(metric_beta, s, eps)?;
    let center = solve_at(metric_beta, Ok(y.clone()), s, config, 0)?;
    let coarse_sides = side_points(metric_beta, y, s, eps, config)?;
    let fine_sides = side_points(metric_beta, y, s, eps / 2.0, config)?;
    let coarse = assemble(&g_min, &center, &coarse_sides, s, eps, h_min, slack)?;
    let fine = assemble(&g_min, &center, &fine_sides, s, eps / 2.0, h_min, slack)?;
    let relative_difference = (coarse.jac_det - fine.jac_det).abs() / fine.jac_det.abs();
    Ok(RichardsonCheck {
        coarse,
        fine,
        relative_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FactorSpec;
    use crate::measures::SigmaFrame;

    fn h3h3(b: f64) -> ScaledProductMetric<f64> {
        let f = FactorSpec::real(3).unwrap();
        ScaledProductMetric::new(vec![f, f], vec![b, 1.0 / b]).unwrap()
    }

    #[test]
    fn moving_frame_jacobian_is_frame_change() {
        // F_s is the identity there, so D is diag(α_i / β_i)
        let m = h3h3(1.3);
        let y = ProductPoint::from_spatial(&[vec![0.3, 0.0, 0.1], vec![0.0, 0.2, 0.0]]);
        let mut config = NaturalMapConfig::new(200, 400, 4);
        config.sigma = config.sigma.with_frame(SigmaFrame::Moving);
        let s = 1.5 * product_entropy(&m);
        let r = jacobian_fd(&m, &y, s, 1e-3, &config, 0.1).unwrap();
        let alpha = 1.0;
        for (i, row) in r.differential.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j {
                    alpha / m.scales()[i / 3]
                } else {
                    0.0
                };
                assert!((v - expected).abs() < 1e-4, "{i} {j} {v}");
            }
        }
        assert!((r.jac_det - 1.0).abs() < 1e-3);
        assert!(!r.violation);
    }

    #[test]
    fn rejects_small_s() {
        let m = h3h3(1.0);
        let y = ProductPoint::basepoint(m.factors());
        let err = jacobian_fd(&m, &y, 1.0, 1e-3, &NaturalMapConfig::new(10, 10, 1), 0.1).unwrap_err();
        assert!(err.to_string().contains("s must exceed h(g_beta)"));
    }
}
