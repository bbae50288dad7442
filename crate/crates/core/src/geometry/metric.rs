use serde::{Deserialize, Serialize};

use super::factor::FactorSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// How the weighted product Busemann function combines factor Busemann functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidWeighting {
    /// `c_i = (h_i / β_i) / h(g_β)`; at `g_min` this is `sqrt(n_i / n)`.
    Entropy,
    /// `c_i = 1 / sqrt(k)`.
    Uniform,
}

/// The locally symmetric metric `g_β = β_1² g_1 × … × β_k² g_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "MetricRepr<T>",
    bound(deserialize = "T: Real + serde::de::DeserializeOwned")
)]
pub struct ScaledProductMetric<T> {
    factors: Vec<FactorSpec>,
    scales: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    centroid_weights: Option<Vec<T>>,
}

impl<T: Real> ScaledProductMetric<T> {
    pub fn new(factors: Vec<FactorSpec>, scales: Vec<T>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::ConfigError("metric with no factors".into()));
        }
        if factors.len() != scales.len() {
            return Err(Error::ShapeError(format!(
                "{} factors but {} scales",
                factors.len(),
                scales.len()
            )));
        }
        if scales.iter().any(|s| !(s.is_finite() && *s > T::zero())) {
            return Err(Error::ConfigError("scales must be positive and finite".into()));
        }
        Ok(Self {
            factors,
            scales,
            centroid_weights: None,
        })
    }

    /// Attach centroid weights computed by `weighting`.
    pub fn with_weighting(mut self, weighting: CentroidWeighting) -> Self {
        let weights = match weighting {
            CentroidWeighting::Entropy => {
                let h = crate::entropy::product_entropy(&self);
                self.factors
                    .iter()
                    .zip(&self.scales)
                    .map(|(f, s)| T::from_usize_lossy(f.entropy()) / *s / h)
                    .collect()
            }
            CentroidWeighting::Uniform => {
                let c = T::one() / T::from_usize_lossy(self.factors.len()).sqrt();
                vec![c; self.factors.len()]
            }
        };
        self.centroid_weights = Some(weights);
        self
    }

    /// Attach explicit centroid weights; they must form a unit vector.
    pub fn with_weights(mut self, weights: Vec<T>) -> Result<Self> {
        if weights.len() != self.factors.len() {
            return Err(Error::ShapeError("centroid weight count".into()));
        }
        let norm2 = weights.iter().fold(T::zero(), |a, c| a + *c * *c);
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
        if (norm2 - T::one()).abs() > tol {
            return Err(Error::ConfigError(format!(
                "centroid weights have squared norm {norm2}, expected 1"
            )));
        }
        self.centroid_weights = Some(weights);
        Ok(self)
    }

    /// The entropy-minimizing unit-volume metric `g_min`, with entropy weights.
    pub fn optimal(factors: Vec<FactorSpec>) -> Result<Self> {
        let opt = crate::entropy::optimal_scales::<T>(&factors)?;
        Ok(Self::new(factors, opt.alpha)?.with_weighting(CentroidWeighting::Entropy))
    }

    /// Same factors and scales, scales multiplied by `lambda`.
    pub fn homothetic(&self, lambda: T) -> Result<Self> {
        Self::new(
            self.factors.clone(),
            self.scales.iter().map(|s| *s * lambda).collect(),
        )
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn scales(&self) -> &[T] {
        &self.scales
    }

    pub fn centroid_weights(&self) -> Option<&[T]> {
        self.centroid_weights.as_deref()
    }

    pub(crate) fn require_weights(&self) -> Result<&[T]> {
        self.centroid_weights()
            .ok_or_else(|| Error::ConfigError("metric carries no centroid weights".into()))
    }

    pub(crate) fn require_real(&self) -> Result<()> {
        self.factors.iter().try_for_each(FactorSpec::require_real)
    }

    /// Number of factors (the rank of the product).
    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// Total dimension `n = Σ n_i`.
    pub fn dimension(&self) -> usize {
        super::factor::total_dimension(&self.factors)
    }

    /// `Π β_i^{n_i}`, the volume scaling relative to the unscaled product.
    pub fn volume_factor(&self) -> T {
        self.factors
            .iter()
            .zip(&self.scales)
            .fold(T::one(), |acc, (f, s)| acc * s.powi(f.n() as i32))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricRepr<T> {
    factors: Vec<FactorSpec>,
    scales: Vec<T>,
    #[serde(default)]
    centroid_weights: Option<Vec<T>>,
}

impl<T: Real> TryFrom<MetricRepr<T>> for ScaledProductMetric<T> {
    type Error = Error;

    fn try_from(r: MetricRepr<T>) -> Result<Self> {
        let m = Self::new(r.factors, r.scales)?;
        match r.centroid_weights {
            Some(w) => m.with_weights(w),
            None => Ok(m),
        }
    }
}
