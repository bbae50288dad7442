use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{effective_sample_size, orbit_bits};
use crate::entropy::product_entropy;
use crate::error::{Error, Result};
use crate::geometry::hyperboloid as hyp;
use crate::geometry::{product_distance, ProductPoint, ScaledProductMetric};
use crate::rng::{self, domain};
use crate::scalar::{log_sinh, log_unit_sphere_area};

const TABLE_CELLS: usize = 4096;

/// Piecewise-constant radius density `∝ sinh^{m}(r) e^{-c r}` on `[0, r_max]`,
/// sampled by inverse CDF. The sampler and [`RadiusTable::log_density`]
/// describe the same density, so importance weights are exact.
#[derive(Debug, Clone)]
pub struct RadiusTable {
    width: f64,
    cdf: Vec<f64>,
    log_cell_density: Vec<f64>,
}

impl RadiusTable {
    /// Table for exponent `m = n - 1` and rate `c > m`.
    pub fn new(m: usize, c: f64) -> Result<Self> {
        let gap = c - m as f64;
        if !(gap > 0.0) {
            return Err(Error::ParameterError(format!(
                "radius rate {c} must exceed {m}"
            )));
        }
        let r_max = (30.0 / gap).max(10.0);
        let width = r_max / TABLE_CELLS as f64;
        let logs: Vec<f64> = (0..TABLE_CELLS)
            .map(|i| {
                let mid = (i as f64 + 0.5) * width;
                m as f64 * log_sinh(mid) - c * mid
            })
            .collect();
        let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mass: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
        let total: f64 = mass.iter().sum();
        let mut acc = 0.0;
        let cdf = mass
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        let log_cell_density = mass.iter().map(|w| (w / total / width).ln()).collect();
        Ok(Self {
            width,
            cdf,
            log_cell_density,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.width * TABLE_CELLS as f64
    }

    /// Radius for uniforms `u_cell, u_within ∈ [0, 1)`.
    pub fn sample(&self, u_cell: f64, u_within: f64) -> f64 {
        let cell = self.cdf.partition_point(|c| *c <= u_cell).min(TABLE_CELLS - 1);
        (cell as f64 + u_within) * self.width
    }

    pub fn log_density(&self, r: f64) -> f64 {
        let cell = ((r / self.width) as usize).min(TABLE_CELLS - 1);
        self.log_cell_density[cell]
    }
}

/// Weighted sample of `μ_y^s`, the probability measure with density
/// `∝ e^{-s d(y,z)}` against the `g_β` volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicInteriorMeasure {
    atoms: Vec<(ProductPoint<f64>, f64)>,
    s: f64,
    y: ProductPoint<f64>,
    seed: u64,
    ess: f64,
    log_normalizer: f64,
}

impl AtomicInteriorMeasure {
    pub fn atoms(&self) -> &[(ProductPoint<f64>, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn center(&self) -> &ProductPoint<f64> {
        &self.y
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    /// Estimate of `ln ∫ e^{-s d(y,z)} dg_β(z)`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Pushforward by a map of the underlying manifold; the center moves too.
    pub fn map_points<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&ProductPoint<f64>) -> Result<ProductPoint<f64>>,
    {
        let atoms = self
            .atoms
            .iter()
            .map(|(z, w)| Ok((f(z)?, *w)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            atoms,
            y: f(&self.y)?,
            ..self.clone()
        })
    }

    /// `∫ d(y, z) dμ(z)` in the metric `g_β`.
    pub fn mean_distance(&self, metric: &ScaledProductMetric<f64>) -> Result<f64> {
        self.atoms.iter().try_fold(0.0, |acc, (z, w)| {
            Ok(acc + w * product_distance(metric, &self.y, z)?)
        })
    }
}

/// [`sample_mu_with`] at the default ESS threshold of 1% of `n`.
pub fn sample_mu(
    metric: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    n: usize,
    seed: u64,
) -> Result<AtomicInteriorMeasure> {
    sample_mu_with(metric, y, s, n, seed, 0.01)
}

/// Factor-polar importance sample of `μ_y^s`.
///
/// Factor `i` draws its radius from `sinh^{n_i-1}(r) e^{-c_i r}` with
/// `c_i = s h_i / h(g_β)` and a uniform direction in the frame at `y`. Since
/// `Σ c_i r_i ≤ s sqrt(Σ β_i² r_i²)`, the weights against the joint target
/// are bounded. Points are `L_y` images of draws at the basepoint, so equal
/// seeds give common random numbers across centers.
pub fn sample_mu_with(
    metric: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    n: usize,
    seed: u64,
    ess_fraction: f64,
) -> Result<AtomicInteriorMeasure> {
    metric.require_real()?;
    y.check_shape(metric.factors())?;
    if n == 0 {
        return Err(Error::ParameterError("sample size must be at least 1".into()));
    }
    let h = product_entropy(metric);
    if !(s > h) {
        return Err(Error::ParameterError(format!(
            "s must exceed h(g_beta) = {h}, got {s}"
        )));
    }
    let dims = y.dims();
    let tables = dims
        .iter()
        .map(|d| RadiusTable::new(d - 1, s * (d - 1) as f64 / h))
        .collect::<Result<Vec<_>>>()?;
    let bits = orbit_bits(dims.len())?;
    let betas = metric.scales();

    let draws: Vec<(ProductPoint<f64>, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|a| {
            let mut r = rng::stream(seed, domain::MU_ATOMS, a >> bits);
            let mask = a & ((1 << bits) - 1);
            let mut log_w = 0.0;
            let mut dist_sq = 0.0;
            let mut factors = Vec::with_capacity(dims.len());
            for (i, (d, table)) in dims.iter().zip(&tables).enumerate() {
                let radius = table.sample(rng::uniform01(&mut r), rng::uniform01(&mut r));
                let mut dir = rng::unit_vector(&mut r, *d);
                if mask >> i & 1 == 1 {
                    dir.iter_mut().for_each(|c| *c = -*c);
                }
                let br = betas[i] * radius;
                dist_sq += br * br;
                log_w += (d - 1) as f64 * log_sinh(radius) - table.log_density(radius);
                let mut at_base = Vec::with_capacity(d + 1);
                at_base.push(radius.cosh());
                at_base.extend(dir.iter().map(|c| c * radius.sinh()));
                let mut z = hyp::boost_apply(y.factor(i), &at_base);
                hyp::renormalize(&mut z);
                factors.push(z);
            }
            log_w -= s * dist_sq.sqrt();
            (ProductPoint::from_raw(factors), log_w)
        })
        .collect();

    let shift = draws.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = draws.iter().map(|(_, l)| (l - shift).exp()).collect();
    let total: f64 = raw.iter().sum();
    let ess = effective_sample_size(&raw);
    let threshold = ess_fraction * n as f64;
    if ess < threshold {
        return Err(Error::DegenerateSampling { ess, threshold });
    }
    let log_volume_const: f64 = dims
        .iter()
        .zip(betas)
        .map(|(d, b)| *d as f64 * b.ln() + log_unit_sphere_area::<f64>(d - 1))
        .sum();
    let log_normalizer = log_volume_const + shift + (total / n as f64).ln();
    let atoms = draws
        .into_iter()
        .zip(raw)
        .map(|((z, _), w)| (z, w / total))
        .collect();
    Ok(AtomicInteriorMeasure {
        atoms,
        s,
        y: y.clone(),
        seed,
        ess,
        log_normalizer,
    })
}
