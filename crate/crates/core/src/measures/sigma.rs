use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mu::{sample_mu_with, AtomicInteriorMeasure};
use super::ps::{boost_boundary, ps_log_density, uniform_boundary_points};
use super::{AtomicBoundaryMeasure, BoundaryAtom, Provenance};
use crate::error::Result;
use crate::geometry::{FurstenbergPoint, ProductPoint, ScaledProductMetric};
use crate::rng::domain;

const Z_BLOCK: usize = 32;

/// Where the shared boundary directions of `σ_y^s` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaFrame {
    /// Uniform directions, i.e. a sample of `ν_p`, for every center `y`.
    #[default]
    Fixed,
    /// Directions moved by the boost `L_y`, i.e. a sample of `ν_y`. The whole
    /// construction is then the `L_y` image of the one at the basepoint.
    Moving,
}

/// Sample sizes and seeding for [`convolve_sigma_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaOptions {
    pub n_z: usize,
    pub n_theta: usize,
    pub seed: u64,
    #[serde(default)]
    pub frame: SigmaFrame,
    #[serde(default = "default_ess_fraction")]
    pub ess_fraction: f64,
}

fn default_ess_fraction() -> f64 {
    0.01
}

impl SigmaOptions {
    pub fn new(n_z: usize, n_theta: usize, seed: u64) -> Self {
        Self {
            n_z,
            n_theta,
            seed,
            frame: SigmaFrame::Fixed,
            ess_fraction: default_ess_fraction(),
        }
    }

    pub fn with_frame(mut self, frame: SigmaFrame) -> Self {
        self.frame = frame;
        self
    }
}

/// `σ_y^s` with the default options and fixed directions.
pub fn convolve_sigma(
    metric: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    n_z: usize,
    n_theta: usize,
    seed: u64,
) -> Result<AtomicBoundaryMeasure> {
    convolve_sigma_with(metric, y, s, &SigmaOptions::new(n_z, n_theta, seed))
}

/// `σ_y^s = ∫ ν_z dμ_y^s(z)` on shared directions `θ_j`.
///
/// Each `ν_z` is represented on the common directions by self-normalized
/// weights `dν_z/dν_ref(θ_j)` with `ν_ref` the law of the directions; the
/// atom of `θ_j` gets `W_j = Σ_z w_z ŵ_{z,j}`.
pub fn convolve_sigma_with(
    metric: &ScaledProductMetric<f64>,
    y: &ProductPoint<f64>,
    s: f64,
    opts: &SigmaOptions,
) -> Result<AtomicBoundaryMeasure> {
    let mu = sample_mu_with(metric, y, s, opts.n_z, opts.seed, opts.ess_fraction)?;
    convolve_interior(&mu, y, opts)
}

/// Convolve a given interior sample with the Patterson-Sullivan family.
/// `center` positions the moving frame; the directions use `opts`.
pub fn convolve_interior(
    mu: &AtomicInteriorMeasure,
    center: &ProductPoint<f64>,
    opts: &SigmaOptions,
) -> Result<AtomicBoundaryMeasure> {
    let y = center;
    let s = mu.s();
    center.check_same_shape(mu.center())?;
    let dims = y.dims();
    let base = uniform_boundary_points(&dims, opts.n_theta, opts.seed, domain::SIGMA_DIRECTIONS)?;
    let thetas: Vec<FurstenbergPoint<f64>> = match opts.frame {
        SigmaFrame::Fixed => base,
        SigmaFrame::Moving => base
            .par_iter()
            .map(|t| {
                FurstenbergPoint::from_raw(
                    y.factors()
                        .iter()
                        .zip(t.factors())
                        .map(|(yi, ti)| boost_boundary(yi, ti))
                        .collect(),
                )
            })
            .collect(),
    };
    // log dν_ref/dν_p at each direction, shifted to a maximum of zero
    let log_ref: Vec<f64> = match opts.frame {
        SigmaFrame::Fixed => vec![0.0; thetas.len()],
        SigmaFrame::Moving => {
            let raw = thetas
                .iter()
                .map(|t| ps_log_density(y, t).map(|l| -l))
                .collect::<Result<Vec<f64>>>()?;
            let m = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            raw.into_iter().map(|l| l - m).collect()
        }
    };
    let flat: Vec<Vec<f64>> = (0..dims.len())
        .map(|i| thetas.iter().flat_map(|t| t.factor(i).iter().copied()).collect())
        .collect();
    let table = DirectionTable {
        dims: &dims,
        flat: &flat,
        log_ref: &log_ref,
        reference: log_ref.iter().map(|l| l.exp()).collect(),
    };

    let blocks: Vec<Vec<f64>> = mu
        .atoms()
        .par_chunks(Z_BLOCK)
        .map(|chunk| {
            let mut acc = vec![0.0; thetas.len()];
            let mut buf = vec![0.0; thetas.len()];
            for (z, w) in chunk {
                table.accumulate(z, *w, &mut buf, &mut acc);
            }
            acc
        })
        .collect();
    let mut weights = vec![0.0; thetas.len()];
    for b in &blocks {
        for (a, v) in weights.iter_mut().zip(b) {
            *a += v;
        }
    }
    let atoms = thetas
        .into_iter()
        .zip(weights)
        .map(|(theta, w)| BoundaryAtom { theta, w })
        .collect();
    let mut sigma = AtomicBoundaryMeasure::new(
        atoms,
        Provenance::Sigma {
            y: y.clone(),
            s,
            mu_ess: mu.ess(),
        },
    )?
    .with_seed(opts.seed);
    sigma.warn_if_degenerate(opts.ess_fraction);
    Ok(sigma)
}

struct DirectionTable<'a> {
    dims: &'a [usize],
    flat: &'a [Vec<f64>],
    log_ref: &'a [f64],
    reference: Vec<f64>,
}

impl DirectionTable<'_> {
    /// Add `w_z` times the normalized weights of `ν_z` on the directions.
    fn accumulate(&self, z: &ProductPoint<f64>, w: f64, buf: &mut [f64], acc: &mut [f64]) {
        buf.copy_from_slice(&self.reference);
        for (i, n) in self.dims.iter().enumerate() {
            let (q_min, spatial, radius) = Self::factor_data(z.factor(i));
            let h = (*n - 1) as i32;
            for (b, th) in buf.iter_mut().zip(self.flat[i].chunks_exact(*n)) {
                *b *= (q_min / Self::pairing(q_min, spatial, radius, th)).powi(h);
            }
        }
        let sum: f64 = buf.iter().sum();
        if sum > 1e-200 && sum.is_finite() {
            let scale = w / sum;
            for (a, b) in acc.iter_mut().zip(buf.iter()) {
                *a += b * scale;
            }
            return;
        }
        // far from every direction: redo in log space
        for (j, b) in buf.iter_mut().enumerate() {
            *b = self.log_ref[j];
        }
        for (i, n) in self.dims.iter().enumerate() {
            let (q_min, spatial, radius) = Self::factor_data(z.factor(i));
            let h = (*n - 1) as f64;
            for (b, th) in buf.iter_mut().zip(self.flat[i].chunks_exact(*n)) {
                *b += h * (q_min / Self::pairing(q_min, spatial, radius, th)).ln();
            }
        }
        let m = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = buf.iter().map(|l| (l - m).exp()).sum();
        for (a, l) in acc.iter_mut().zip(buf.iter()) {
            *a += w * (l - m).exp() / sum;
        }
    }

    fn factor_data(x: &[f64]) -> (f64, &[f64], f64) {
        let spatial = &x[1..];
        let radius = spatial.iter().map(|c| c * c).sum::<f64>().sqrt();
        (1.0 / (x[0] + radius), spatial, radius)
    }

    /// `x0 - xs·θ`, written as `q_min + |xs - |xs| θ|² / (2|xs|)`.
    #[inline]
    fn pairing(q_min: f64, spatial: &[f64], radius: f64, theta: &[f64]) -> f64 {
        if radius == 0.0 {
            return q_min;
        }
        let gap: f64 = spatial
            .iter()
            .zip(theta)
            .map(|(a, t)| {
                let d = a - radius * t;
                d * d
            })
            .sum();
        q_min + gap / (2.0 * radius)
    }
}
