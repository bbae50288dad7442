//! Atomic (weighted-sample) measures on the Furstenberg boundary and in the
//! interior: Patterson-Sullivan measures `ν_x`, the measures `μ_y^s` and
//! their convolution `σ_y^s`.
//!
//! Samplers draw atom `a` from its own counter-based stream, so outputs are a
//! pure function of the inputs and the seed. Atoms come in orbits of size
//! `2^k` under per-factor negation: atom `a` uses base draw `a >> k` with
//! the factors in mask `a & (2^k - 1)` reflected.

mod mu;
mod ps;
mod sigma;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use mu::{sample_mu, sample_mu_with, AtomicInteriorMeasure, RadiusTable};
pub use ps::{
    ps_log_density, ps_total_mass, sample_ps, sample_ps_pushforward, uniform_boundary_points,
};
pub use sigma::{convolve_interior, convolve_sigma, convolve_sigma_with, SigmaFrame, SigmaOptions};

use crate::error::{Error, Result};
use crate::geometry::{FurstenbergPoint, ProductIsometry, ProductPoint};

/// Effective sample size `(Σ w)² / Σ w²`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let (s, s2) = weights
        .iter()
        .fold((0.0, 0.0), |(a, b), w| (a + w, b + w * w));
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// Number of factors whose negations generate the antithetic orbit.
pub(crate) fn orbit_bits(rank: usize) -> Result<u32> {
    if rank >= 16 {
        return Err(Error::ShapeError("at most 15 factors are supported".into()));
    }
    Ok(rank as u32)
}

/// Where a boundary measure came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    PattersonSullivan { x: ProductPoint<f64> },
    Sigma { y: ProductPoint<f64>, s: f64, mu_ess: f64 },
    Custom,
}

/// One atom in the JSON-lines format: `{"theta": [[...],[...]], "w": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryAtom {
    pub theta: FurstenbergPoint<f64>,
    pub w: f64,
}

/// A probability measure on `∂_F X` carried by finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicBoundaryMeasure {
    atoms: Vec<BoundaryAtom>,
    provenance: Provenance,
    seed: Option<u64>,
    ess: f64,
    warnings: Vec<String>,
}

impl AtomicBoundaryMeasure {
    /// Normalize nonnegative weights to total mass one.
    pub fn new(atoms: Vec<BoundaryAtom>, provenance: Provenance) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::ParameterError("measure with no atoms".into()))?;
        let dims: Vec<usize> = first.theta.factors().iter().map(Vec::len).collect();
        let mut total = 0.0;
        for a in &atoms {
            if !(a.w >= 0.0 && a.w.is_finite()) {
                return Err(Error::ParameterError(format!("invalid atom weight {}", a.w)));
            }
            if a.theta.factors().iter().map(Vec::len).ne(dims.iter().copied()) {
                return Err(Error::ShapeError("atoms of different shapes".into()));
            }
            total += a.w;
        }
        if !(total > 0.0) {
            return Err(Error::ParameterError("measure has zero mass".into()));
        }
        let atoms: Vec<BoundaryAtom> = atoms
            .into_iter()
            .map(|a| BoundaryAtom { w: a.w / total, ..a })
            .collect();
        let ess = effective_sample_size(&atoms.iter().map(|a| a.w).collect::<Vec<_>>());
        Ok(Self {
            atoms,
            provenance,
            seed: None,
            ess,
            warnings: Vec::new(),
        })
    }

    pub fn dirac(theta: FurstenbergPoint<f64>) -> Self {
        Self {
            atoms: vec![BoundaryAtom { theta, w: 1.0 }],
            provenance: Provenance::Custom,
            seed: None,
            ess: 1.0,
            warnings: Vec::new(),
        }
    }

    /// Convex combination `Σ λ_m ρ_m` of measures with weights `λ_m`.
    pub fn mixture(parts: &[(f64, &AtomicBoundaryMeasure)]) -> Result<Self> {
        let atoms = parts
            .iter()
            .flat_map(|(lam, m)| {
                m.atoms.iter().map(move |a| BoundaryAtom {
                    theta: a.theta.clone(),
                    w: lam * a.w,
                })
            })
            .collect();
        Self::new(atoms, Provenance::Custom)
    }

    pub(crate) fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub(crate) fn warn_if_degenerate(&mut self, fraction: f64) {
        let threshold = fraction * self.atoms.len() as f64;
        if self.ess < threshold {
            self.warnings.push(
                Error::DegenerateSampling {
                    ess: self.ess,
                    threshold,
                }
                .to_string(),
            );
        }
    }

    pub fn atoms(&self) -> &[BoundaryAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    /// Spatial dimensions `n_i` of the factors.
    pub fn dims(&self) -> Vec<usize> {
        self.atoms[0].theta.factors().iter().map(Vec::len).collect()
    }

    /// `γ_* ρ`.
    pub fn pushforward(&self, iso: &ProductIsometry<f64>) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| BoundaryAtom {
                    theta: iso.apply_boundary(&a.theta),
                    w: a.w,
                })
                .collect(),
            provenance: Provenance::Custom,
            seed: self.seed,
            ess: self.ess,
            warnings: self.warnings.clone(),
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for a in &self.atoms {
            let line = serde_json::to_string(a).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| Error::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut atoms = Vec::new();
        for (no, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let atom: BoundaryAtom = serde_json::from_str(&line)
                .map_err(|e| Error::ConfigError(format!("line {}: {e}", no + 1)))?;
            FurstenbergPoint::new(atom.theta.factors().to_vec())?;
            atoms.push(atom);
        }
        Self::new(atoms, Provenance::Custom)
    }
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos()
}

fn check_cap(measure: &AtomicBoundaryMeasure, center: &FurstenbergPoint<f64>, angle: f64) -> Result<()> {
    if !(angle > 0.0 && angle < std::f64::consts::PI) {
        return Err(Error::ParameterError("cap angle must lie in (0, π)".into()));
    }
    if center.factors().iter().map(Vec::len).ne(measure.dims()) {
        return Err(Error::ShapeError("cap center does not match measure".into()));
    }
    Ok(())
}

fn in_cap(theta: &FurstenbergPoint<f64>, center: &FurstenbergPoint<f64>, angle: f64) -> bool {
    theta
        .factors()
        .iter()
        .zip(center.factors())
        .all(|(t, c)| angle_between(t, c) <= angle)
}

/// Mass of the product cap of per-factor angular radius `angle` around `center`.
pub fn cap_mass(measure: &AtomicBoundaryMeasure, center: &FurstenbergPoint<f64>, angle: f64) -> Result<f64> {
    Ok(cap_mass_with_error(measure, center, angle)?.0)
}

/// Cap mass and its delta-method standard error for a self-normalized
/// importance sample, `sqrt(Σ w_j² (1_j - m)²)`.
pub fn cap_mass_with_error(
    measure: &AtomicBoundaryMeasure,
    center: &FurstenbergPoint<f64>,
    angle: f64,
) -> Result<(f64, f64)> {
    check_cap(measure, center, angle)?;
    let hits: Vec<bool> = measure
        .atoms
        .iter()
        .map(|a| in_cap(&a.theta, center, angle))
        .collect();
    let mass: f64 = measure
        .atoms
        .iter()
        .zip(&hits)
        .filter(|(_, h)| **h)
        .map(|(a, _)| a.w)
        .sum();
    let var: f64 = measure
        .atoms
        .iter()
        .zip(&hits)
        .map(|(a, h)| {
            let d = if *h { 1.0 - mass } else { -mass };
            a.w * a.w * d * d
        })
        .sum();
    Ok((mass, var.sqrt()))
}
