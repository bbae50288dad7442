use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::busemann::factor_busemann_frame_gradient;
use crate::geometry::{exp_map, ProductPoint, ScaledProductMetric, TangentVector};
use crate::measures::{sample_ps_pushforward, AtomicBoundaryMeasure};
use crate::rng::{self, domain};

/// Whether the localization premise holds: `C ∈ (1/2, 1)` and every
/// alignment is at least `1/C - 1`.
pub fn localization_check(c: f64, alignments: &[f64]) -> Result<bool> {
    if !(c > 0.5 && c < 1.0) {
        return Err(Error::ParameterError(format!("C must lie in (1/2, 1), got {c}")));
    }
    if alignments.is_empty() {
        return Err(Error::ParameterError("no alignments given".into()));
    }
    let min = alignments.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min >= 1.0 / c - 1.0)
}

/// `∫ ⟨v_{(x,θ)}, v⟩ dν(θ)` with `v_{(x,θ)} = -∇B_0(x, θ)`; `v` is given in
/// the `g_min`-orthonormal frame at `x`.
pub fn alignment(
    metric_min: &ScaledProductMetric<f64>,
    x: &ProductPoint<f64>,
    v: &[f64],
    nu: &AtomicBoundaryMeasure,
) -> Result<f64> {
    x.check_shape(metric_min.factors())?;
    if v.len() != x.dimension() {
        return Err(Error::ShapeError("direction has the wrong length".into()));
    }
    let weights = metric_min.require_weights()?;
    let mut total = 0.0;
    for atom in nu.atoms() {
        let mut off = 0;
        let mut inner = 0.0;
        for (i, (xi, ti)) in x.factors().iter().zip(atom.theta.factors()).enumerate() {
            let g = factor_busemann_frame_gradient(xi, ti);
            inner -= weights[i] * g.iter().zip(&v[off..]).map(|(a, b)| a * b).sum::<f64>();
            off += g.len();
        }
        total += atom.w * inner;
    }
    Ok(total)
}

/// Shape of the randomized scenarios of [`localization_scenario`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    /// Atoms per boundary measure `ν_z`.
    pub atoms: usize,
    pub k_points: usize,
    pub contamination_points: usize,
    /// Noise added to the direction before normalizing.
    pub direction_noise: f64,
    /// Range of `g_min` distances from `x` to the points of `K`.
    pub k_distance: (f64, f64),
    pub contamination_radius: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            atoms: 256,
            k_points: 3,
            contamination_points: 3,
            direction_noise: 0.2,
            k_distance: (2.0, 5.0),
            contamination_radius: 2.0,
        }
    }
}

/// A boundary measure `σ = Σ m_z ν_z` with mass `m_K > C` on points `K`
/// lying along `v` from `x`, and the alignments of those `ν_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationScenario {
    pub x: ProductPoint<f64>,
    pub v: Vec<f64>,
    pub c: f64,
    pub mass_in_k: f64,
    pub alignments: Vec<f64>,
    pub sigma: AtomicBoundaryMeasure,
}

impl LocalizationScenario {
    pub fn premise(&self) -> bool {
        self.mass_in_k > self.c && localization_check(self.c, &self.alignments).unwrap_or(false)
    }

    /// Upper bound `-(m_K / C - 1)` on the derivative of the objective along `v`.
    pub fn slope_bound(&self) -> f64 {
        1.0 - self.mass_in_k / self.c
    }
}

fn step(
    metric: &ScaledProductMetric<f64>,
    x: &ProductPoint<f64>,
    dir: &[f64],
    t: f64,
) -> Result<ProductPoint<f64>> {
    let coords: Vec<f64> = dir.iter().map(|c| c * t).collect();
    let v = TangentVector::from_frame_coords(metric, x.clone(), &coords)?;
    exp_map(metric, x, &v)
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / n).collect()
}

/// Scenario number `index` for `seed`.
pub fn localization_scenario(
    metric_min: &ScaledProductMetric<f64>,
    seed: u64,
    index: u64,
    opts: &ScenarioOptions,
) -> Result<LocalizationScenario> {
    let weights = metric_min.require_weights()?.to_vec();
    let mut r = rng::stream(seed, domain::SCENARIO, index);
    let spatial: Vec<Vec<f64>> = metric_min
        .factors()
        .iter()
        .map(|f| (0..f.n()).map(|_| 0.5 * rng::standard_normal(&mut r)).collect())
        .collect();
    let x = ProductPoint::from_spatial(&spatial);
    let mut v = Vec::with_capacity(x.dimension());
    for (f, c) in metric_min.factors().iter().zip(&weights) {
        let u = rng::unit_vector(&mut r, f.n());
        v.extend(u.iter().map(|a| c * a));
    }
    let v = normalize(
        v.into_iter()
            .map(|a| a + opts.direction_noise * rng::standard_normal(&mut r))
            .collect(),
    );
    let c = 0.55 + 0.4 * rng::uniform01(&mut r);
    let mass_in_k = (c + 0.005 + 0.035 * rng::uniform01(&mut r)).min(1.0);

    let (lo, hi) = opts.k_distance;
    let mut parts = Vec::new();
    let mut alignments = Vec::new();
    for k in 0..opts.k_points {
        let z = step(metric_min, &x, &v, lo + (hi - lo) * rng::uniform01(&mut r))?;
        let nu = sample_ps_pushforward(&z, opts.atoms, seed ^ (index << 8) ^ k as u64)?;
        alignments.push(alignment(metric_min, &x, &v, &nu)?);
        parts.push((mass_in_k / opts.k_points as f64, nu));
    }
    for k in 0..opts.contamination_points {
        let w = rng::unit_vector(&mut r, x.dimension());
        let z = step(metric_min, &x, &w, opts.contamination_radius * rng::uniform01(&mut r))?;
        let nu = sample_ps_pushforward(&z, opts.atoms, seed ^ (index << 8) ^ (128 + k) as u64)?;
        parts.push(((1.0 - mass_in_k) / opts.contamination_points as f64, nu));
    }
    let refs: Vec<(f64, &AtomicBoundaryMeasure)> = parts.iter().map(|(l, m)| (*l, m)).collect();
    let sigma = AtomicBoundaryMeasure::mixture(&refs)?;
    Ok(LocalizationScenario {
        x,
        v,
        c,
        mass_in_k,
        alignments,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FactorSpec;

    #[test]
    fn predicate_arithmetic() {
        assert!(!localization_check(0.6, &[0.2, 0.9]).unwrap());
        assert!(localization_check(0.6, &[0.7, 0.9]).unwrap());
        assert!(localization_check(0.9, &[1.0, 1.0]).unwrap());
        assert!(localization_check(0.5, &[1.0]).is_err());
        assert!(localization_check(1.0, &[1.0]).is_err());
    }

    #[test]
    fn dirac_toward_direction_has_unit_alignment() {
        let f = FactorSpec::real(3).unwrap();
        let m = ScaledProductMetric::optimal(vec![f, f]).unwrap();
        let x = ProductPoint::basepoint(m.factors());
        let c = m.centroid_weights().unwrap().to_vec();
        let theta = crate::geometry::FurstenbergPoint::new(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let v = vec![c[0], 0.0, 0.0, 0.0, c[1], 0.0];
        let a = alignment(&m, &x, &v, &AtomicBoundaryMeasure::dirac(theta)).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
    }
}
