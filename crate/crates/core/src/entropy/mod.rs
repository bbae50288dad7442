//! Volume entropy of scaled products and the entropy-minimizing metric.
//!
//! For `g_β = Σ β_i² g_i` the volume entropy is `sqrt(Σ (h_i/β_i)²)`. Among
//! unit-volume metrics (`Π β_i^{n_i} = 1`) it is minimized at
//! `α_i = (h_i/√n_i) Π_j (√n_j/h_j)^{n_j/n}`, where it equals
//! `√n Π_j (h_j/√n_j)^{n_j/n}`.

mod growth;
mod oracle;

use serde::{Deserialize, Serialize};

pub use growth::{
    critical_exponent_estimate, log_ball_volume, log_laplace_direct, log_laplace_polar,
    CriticalExponentOptions,
};
pub use oracle::{numeric_optimal_scales, NumericOptimum};

use crate::error::{Error, Result};
use crate::geometry::{FactorSpec, ScaledProductMetric};
use crate::scalar::Real;

/// Entropy `n + d - 2` of a rank-one factor with maximal curvature `-1`.
pub fn factor_entropy<T: Real>(n: usize, d: usize) -> Result<T> {
    Ok(T::from_usize_lossy(FactorSpec::new(n, d)?.entropy()))
}

/// `h(g_β) = sqrt(Σ β_i^{-2} h_i²)`.
pub fn product_entropy<T: Real>(metric: &ScaledProductMetric<T>) -> T {
    metric
        .factors()
        .iter()
        .zip(metric.scales())
        .fold(T::zero(), |acc, (f, b)| {
            let r = T::from_usize_lossy(f.entropy()) / *b;
            acc + r * r
        })
        .sqrt()
}

/// The optimal scales and the minimal entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalScales<T> {
    pub alpha: Vec<T>,
    pub h_min: T,
}

pub fn optimal_scales<T: Real>(factors: &[FactorSpec]) -> Result<OptimalScales<T>> {
    if factors.is_empty() {
        return Err(Error::ConfigError("no factors".into()));
    }
    let n = T::from_usize_lossy(crate::geometry::total_dimension(factors));
    // ln Π_j (√n_j / h_j)^{n_j/n}
    let log_prod = factors.iter().fold(T::zero(), |acc, f| {
        let nj = T::from_usize_lossy(f.n());
        let hj = T::from_usize_lossy(f.entropy());
        acc + nj / n * (nj.sqrt() / hj).ln()
    });
    let alpha = factors
        .iter()
        .map(|f| {
            let ni = T::from_usize_lossy(f.n());
            let hi = T::from_usize_lossy(f.entropy());
            hi / ni.sqrt() * log_prod.exp()
        })
        .collect();
    let h_min = n.sqrt() * (-log_prod).exp();
    Ok(OptimalScales { alpha, h_min })
}

/// `sqrt(Σ (h_i/α_i)²)` for given scales; equals `h_min` at the optimum.
pub fn entropy_at_scales<T: Real>(factors: &[FactorSpec], scales: &[T]) -> T {
    factors
        .iter()
        .zip(scales)
        .fold(T::zero(), |acc, (f, a)| {
            let r = T::from_usize_lossy(f.entropy()) / *a;
            acc + r * r
        })
        .sqrt()
}

/// Volume entropy, volume and normalized entropy `h^n · vol` of a metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport<T> {
    pub h: T,
    pub vol: T,
    pub ent: T,
    pub n: usize,
}

/// Report for `g_β` on a quotient whose unscaled product volume is `base_volume`.
pub fn entropy_report<T: Real>(metric: &ScaledProductMetric<T>, base_volume: T) -> EntropyReport<T> {
    let n = metric.dimension();
    let h = product_entropy(metric);
    let vol = base_volume * metric.volume_factor();
    EntropyReport {
        h,
        vol,
        ent: h.powi(n as i32) * vol,
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(n: usize) -> FactorSpec {
        FactorSpec::real(n).unwrap()
    }

    #[test]
    fn factor_entropies() {
        assert_eq!(factor_entropy::<f64>(3, 1).unwrap(), 2.0);
        assert_eq!(factor_entropy::<f64>(4, 2).unwrap(), 4.0);
        assert_eq!(factor_entropy::<f64>(8, 4).unwrap(), 10.0);
        assert!(matches!(
            factor_entropy::<f64>(5, 2),
            Err(Error::ConfigError(_))
        ));
    }

    #[test]
    fn product_entropy_examples() {
        let m = ScaledProductMetric::new(vec![real(3), real(3)], vec![1.0, 1.0]).unwrap();
        assert!((product_entropy(&m) - 8f64.sqrt()).abs() < 1e-14);
        let m = ScaledProductMetric::new(vec![real(3)], vec![1.0]).unwrap();
        assert_eq!(product_entropy(&m), 2.0);
        // sqrt(4/1.69 + 4*1.69)
        let m = ScaledProductMetric::new(vec![real(3), real(3)], vec![1.3, 1.0 / 1.3]).unwrap();
        let expect = (4.0 / 1.69 + 4.0 * 1.69f64).sqrt();
        assert!((product_entropy(&m) - expect).abs() < 1e-14);
        assert!((product_entropy(&m) - 3.02107).abs() < 1e-5);
    }

    #[test]
    fn optimal_scales_examples() {
        let single = optimal_scales::<f64>(&[real(5)]).unwrap();
        assert!((single.alpha[0] - 1.0).abs() < 1e-14);
        assert!((single.h_min - 4.0).abs() < 1e-13);

        let sym = optimal_scales::<f64>(&[real(3), real(3)]).unwrap();
        assert!((sym.alpha[0] - 1.0).abs() < 1e-14 && (sym.alpha[1] - 1.0).abs() < 1e-14);
        assert!((sym.h_min - 8f64.sqrt()).abs() < 1e-14);

        let mixed = optimal_scales::<f64>(&[real(3), real(4)]).unwrap();
        // independent scipy minimization over the constraint surface
        assert!((mixed.alpha[0] - 0.8611389).abs() < 1e-6);
        assert!((mixed.alpha[1] - 1.1186522).abs() < 1e-6);
        assert!((mixed.h_min - 3.5476861).abs() < 1e-6);
    }

    #[test]
    fn homothety_scaling() {
        let m = ScaledProductMetric::new(vec![real(3), real(4)], vec![0.8, 1.7]).unwrap();
        let lam = 1.9f64;
        let scaled = m.homothetic(lam).unwrap();
        let (a, b) = (entropy_report(&m, 1.0), entropy_report(&scaled, 1.0));
        assert!((b.h - a.h / lam).abs() < 1e-13);
        assert!((b.vol / a.vol - lam.powi(7)).abs() < 1e-10);
        assert!((b.ent - a.ent).abs() < 1e-10 * a.ent);
    }

    #[test]
    fn f32_optimal_scales() {
        let o = optimal_scales::<f32>(&[real(3), real(4)]).unwrap();
        assert!((o.h_min - 3.5476861).abs() < 1e-4);
    }
}
