use serde::{Deserialize, Serialize};

use super::{barycenter, BarycenterOptions, BarycenterResult};
use crate::error::{Error, Result};
use crate::geometry::{ProductPoint, ScaledProductMetric};
use crate::measures::{convolve_interior, sample_mu_with, SigmaOptions};

/// Sampling and solver settings for [`natural_map`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaturalMapConfig {
    pub sigma: SigmaOptions,
    #[serde(default)]
    pub barycenter: BarycenterOptions,
}

impl NaturalMapConfig {
    pub fn new(n_z: usize, n_theta: usize, seed: u64) -> Self {
        Self {
            sigma: SigmaOptions::new(n_z, n_theta, seed),
            barycenter: BarycenterOptions::default(),
        }
    }
}

/// `F_s(y)` with the sampling diagnostics of the measure it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalMapResult {
    pub barycenter: BarycenterResult,
    pub sigma_ess: f64,
    pub mu_ess: f64,
    pub warnings: Vec<String>,
}

impl NaturalMapResult {
    pub fn point(&self) -> &ProductPoint<f64> {
        &self.barycenter.point
    }
}

/// `F_s(y)`: the barycenter in `g_min` of `σ_y^s` built in `g_β`, with `φ`
/// the identity.
pub fn natural_map(
    metric_beta: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    config: &NaturalMapConfig,
) -> Result<NaturalMapResult> {
    natural_map_with(metric_beta, y, s, config, |z| Ok(z.clone()))
}

/// [`natural_map`] with the interior measure pushed through `phi` before
/// convolution. `phi` maps the domain manifold to the target one.
pub fn natural_map_with<F>(
    metric_beta: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    config: &NaturalMapConfig,
    phi: F,
) -> Result<NaturalMapResult>
where
    F: Fn(&ProductPoint<f64>) -> Result<ProductPoint<f64>>,
{
    let g_min = ScaledProductMetric::optimal(metric_beta.factors().to_vec())?;
    let opts = &config.sigma;
    let mu = sample_mu_with(metric_beta, y, s, opts.n_z, opts.seed, opts.ess_fraction)?;
    let mu = mu.map_points(&phi)?;
    let center = phi(y)?;
    let sigma = convolve_interior(&mu, &center, opts)?;
    let result = barycenter(&g_min, &sigma, &center, &config.barycenter)?;
    if !result.point.factors().iter().flatten().all(|c| c.is_finite()) {
        return Err(Error::Nonconvergence {
            iterations: result.iterations,
            residual: result.grad_norm,
        });
    }
    Ok(NaturalMapResult {
        barycenter: result,
        sigma_ess: sigma.ess(),
        mu_ess: mu.ess(),
        warnings: sigma.warnings().to_vec(),
    })
}
