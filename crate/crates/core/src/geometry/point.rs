use serde::{Deserialize, Serialize};

use super::factor::FactorSpec;
use super::hyperboloid as hyp;
use super::metric::ScaledProductMetric;
use crate::error::{Error, Result};
use crate::scalar::Real;

const POINT_TOL: f64 = 1e-10;
const SPHERE_TOL: f64 = 1e-12;

/// A point of `Π H^{n_i}`, one hyperboloid vector per factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductPoint<T> {
    factors: Vec<Vec<T>>,
}

impl<T: Real> ProductPoint<T> {
    pub fn new(factors: Vec<Vec<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::ShapeError("point with no factors".into()));
        }
        for x in &factors {
            hyp::check_point(x, POINT_TOL)?;
        }
        Ok(Self { factors })
    }

    /// The distinguished basepoint `p`, every factor at `(1, 0, …, 0)`.
    pub fn basepoint(factors: &[FactorSpec]) -> Self {
        Self {
            factors: factors.iter().map(|f| hyp::basepoint(f.n())).collect(),
        }
    }

    /// Lift per-factor spatial coordinates onto the hyperboloids.
    pub fn from_spatial(spatial: &[Vec<T>]) -> Self {
        Self {
            factors: spatial.iter().map(|s| hyp::lift(s)).collect(),
        }
    }

    /// Per-factor Poincaré ball coordinates.
    pub fn to_ball(&self) -> Vec<Vec<T>> {
        self.factors.iter().map(|x| hyp::to_ball(x)).collect()
    }

    pub fn from_ball(ball: &[Vec<T>]) -> Result<Self> {
        let factors = ball
            .iter()
            .map(|b| hyp::from_ball(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }

    pub(crate) fn from_raw(factors: Vec<Vec<T>>) -> Self {
        Self { factors }
    }

    pub fn factor(&self, i: usize) -> &[T] {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[Vec<T>] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// Factor dimensions `n_i`.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|x| x.len() - 1).collect()
    }

    pub fn dimension(&self) -> usize {
        self.dims().iter().sum()
    }

    /// Distances to the basepoint factor by factor.
    pub fn factor_radii(&self) -> Vec<T> {
        self.factors
            .iter()
            .map(|x| hyp::distance(&hyp::basepoint(x.len() - 1), x).unwrap_or(T::zero()))
            .collect()
    }

    pub fn check_shape(&self, factors: &[FactorSpec]) -> Result<()> {
        if self.factors.len() != factors.len()
            || self
                .factors
                .iter()
                .zip(factors)
                .any(|(x, f)| x.len() != f.n() + 1)
        {
            return Err(Error::ShapeError(format!(
                "point dims {:?} do not match factors {:?}",
                self.dims(),
                factors.iter().map(FactorSpec::n).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeError(format!(
                "point dims {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }
}

/// A tangent vector at `base`, one Minkowski-orthogonal vector per factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector<T> {
    base: ProductPoint<T>,
    factors: Vec<Vec<T>>,
}

impl<T: Real> TangentVector<T> {
    pub fn new(base: ProductPoint<T>, factors: Vec<Vec<T>>) -> Result<Self> {
        if factors.len() != base.rank() {
            return Err(Error::ShapeError("tangent rank mismatch".into()));
        }
        for (x, v) in base.factors().iter().zip(&factors) {
            if x.len() != v.len() {
                return Err(Error::ShapeError("tangent dimension mismatch".into()));
            }
            let scale = T::one() + hyp::euclid_norm(v) * x[0];
            if hyp::minkowski(x, v).abs() > T::lit(POINT_TOL) * scale {
                return Err(Error::InvalidPoint("vector is not tangent at its base".into()));
            }
        }
        Ok(Self { base, factors })
    }

    pub fn zero(base: ProductPoint<T>) -> Self {
        let factors = base.factors().iter().map(|x| vec![T::zero(); x.len()]).collect();
        Self { base, factors }
    }

    pub(crate) fn from_raw(base: ProductPoint<T>, factors: Vec<Vec<T>>) -> Self {
        Self { base, factors }
    }

    /// Build from coordinates in the frame that is orthonormal for `metric`.
    pub fn from_frame_coords(
        metric: &ScaledProductMetric<T>,
        base: ProductPoint<T>,
        coords: &[T],
    ) -> Result<Self> {
        base.check_shape(metric.factors())?;
        if coords.len() != base.dimension() {
            return Err(Error::ShapeError("frame coordinate count".into()));
        }
        let mut offset = 0;
        let mut factors = Vec::with_capacity(base.rank());
        for (i, x) in base.factors().iter().enumerate() {
            let n = x.len() - 1;
            let scaled: Vec<T> = coords[offset..offset + n]
                .iter()
                .map(|c| *c / metric.scales()[i])
                .collect();
            factors.push(hyp::from_frame_coords(x, &scaled));
            offset += n;
        }
        Ok(Self { base, factors })
    }

    /// Coordinates in the frame that is orthonormal for `metric`.
    pub fn frame_coords(&self, metric: &ScaledProductMetric<T>) -> Vec<T> {
        self.base
            .factors()
            .iter()
            .zip(&self.factors)
            .zip(metric.scales())
            .flat_map(|((x, v), s)| {
                hyp::frame_coords(x, v).into_iter().map(move |c| c * *s)
            })
            .collect()
    }

    pub fn base(&self) -> &ProductPoint<T> {
        &self.base
    }

    pub fn factor(&self, i: usize) -> &[T] {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[Vec<T>] {
        &self.factors
    }

    /// Norm in the metric `Σ β_i² g_i`.
    pub fn norm(&self, metric: &ScaledProductMetric<T>) -> T {
        self.factors
            .iter()
            .zip(metric.scales())
            .fold(T::zero(), |acc, (v, s)| {
                acc + *s * *s * hyp::minkowski(v, v).max(T::zero())
            })
            .sqrt()
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            base: self.base.clone(),
            factors: self
                .factors
                .iter()
                .map(|v| v.iter().map(|c| *c * k).collect())
                .collect(),
        }
    }
}

/// A point of the concrete Furstenberg boundary `Π S^{n_i - 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FurstenbergPoint<T> {
    factors: Vec<Vec<T>>,
}

impl<T: Real> FurstenbergPoint<T> {
    pub fn new(factors: Vec<Vec<T>>) -> Result<Self> {
        for th in &factors {
            let norm = hyp::euclid_norm(th);
            if (norm - T::one()).abs() > T::lit(SPHERE_TOL) {
                return Err(Error::InvalidPoint(format!(
                    "boundary direction has norm {norm}"
                )));
            }
        }
        Ok(Self { factors })
    }

    /// Normalize each factor vector onto its unit sphere.
    pub fn normalized(factors: Vec<Vec<T>>) -> Result<Self> {
        let factors = factors
            .into_iter()
            .map(|th| {
                let norm = hyp::euclid_norm(&th);
                if norm == T::zero() {
                    Err(Error::InvalidPoint("zero boundary direction".into()))
                } else {
                    Ok(th.into_iter().map(|c| c / norm).collect())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }

    pub(crate) fn from_raw(factors: Vec<Vec<T>>) -> Self {
        Self { factors }
    }

    pub fn factor(&self, i: usize) -> &[T] {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[Vec<T>] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// Per-factor antipode, flipping the factors whose bit is set in `mask`.
    pub fn flipped(&self, mask: u32) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .enumerate()
                .map(|(i, th)| {
                    if mask >> i & 1 == 1 {
                        th.iter().map(|c| -*c).collect()
                    } else {
                        th.clone()
                    }
                })
                .collect(),
        }
    }

    pub(crate) fn check_shape(&self, point: &ProductPoint<T>) -> Result<()> {
        if self.factors.len() != point.rank()
            || self
                .factors
                .iter()
                .zip(point.factors())
                .any(|(th, x)| th.len() + 1 != x.len())
        {
            return Err(Error::ShapeError("boundary point does not match point".into()));
        }
        Ok(())
    }
}

/// Product distance `sqrt(Σ β_i² d_i²)`.
pub fn product_distance<T: Real>(
    metric: &ScaledProductMetric<T>,
    x: &ProductPoint<T>,
    y: &ProductPoint<T>,
) -> Result<T> {
    x.check_shape(metric.factors())?;
    y.check_shape(metric.factors())?;
    let mut acc = T::zero();
    for ((a, b), s) in x.factors().iter().zip(y.factors()).zip(metric.scales()) {
        let d = hyp::distance(a, b)?;
        acc = acc + *s * *s * d * d;
    }
    Ok(acc.sqrt())
}

/// Factor-wise distances `d_i(x_i, y_i)` in the unscaled factor metrics.
pub fn factor_distances<T: Real>(x: &ProductPoint<T>, y: &ProductPoint<T>) -> Result<Vec<T>> {
    x.check_same_shape(y)?;
    x.factors()
        .iter()
        .zip(y.factors())
        .map(|(a, b)| hyp::distance(a, b))
        .collect()
}

/// Exponential map of the product. Scaling factors does not change geodesics,
/// so this acts factor by factor.
pub fn exp_map<T: Real>(
    metric: &ScaledProductMetric<T>,
    x: &ProductPoint<T>,
    v: &TangentVector<T>,
) -> Result<ProductPoint<T>> {
    x.check_shape(metric.factors())?;
    x.check_same_shape(v.base())?;
    let factors = x
        .factors()
        .iter()
        .zip(v.factors())
        .map(|(xi, vi)| hyp::exp(xi, vi))
        .collect();
    Ok(ProductPoint::from_raw(factors))
}

/// Logarithm map of the product; `|log_map(x, y)| = product_distance(x, y)`.
pub fn log_map<T: Real>(
    metric: &ScaledProductMetric<T>,
    x: &ProductPoint<T>,
    y: &ProductPoint<T>,
) -> Result<TangentVector<T>> {
    x.check_shape(metric.factors())?;
    y.check_shape(metric.factors())?;
    let factors = x
        .factors()
        .iter()
        .zip(y.factors())
        .map(|(a, b)| hyp::log(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentVector::from_raw(x.clone(), factors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h3h3() -> ScaledProductMetric<f64> {
        let f = FactorSpec::real(3).unwrap();
        ScaledProductMetric::new(vec![f, f], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn pythagoras() {
        let m = h3h3();
        let x = ProductPoint::basepoint(m.factors());
        let y = ProductPoint::new(vec![
            vec![3f64.cosh(), 3f64.sinh(), 0.0, 0.0],
            vec![4f64.cosh(), 0.0, 4f64.sinh(), 0.0],
        ])
        .unwrap();
        assert!((product_distance(&m, &x, &y).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(product_distance(&m, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn scaled_distance() {
        let f = FactorSpec::real(3).unwrap();
        let m = ScaledProductMetric::new(vec![f, f], vec![2.0, 1.0]).unwrap();
        let x = ProductPoint::basepoint(m.factors());
        let y = ProductPoint::new(vec![
            vec![1f64.cosh(), 1f64.sinh(), 0.0, 0.0],
            vec![1f64.cosh(), 0.0, 0.0, 1f64.sinh()],
        ])
        .unwrap();
        assert!((product_distance(&m, &x, &y).unwrap() - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let m = h3h3();
        let f4 = FactorSpec::real(4).unwrap();
        let bad = ProductPoint::<f64>::basepoint(&[f4, f4]);
        let p = ProductPoint::basepoint(m.factors());
        assert!(matches!(
            product_distance(&m, &p, &bad),
            Err(Error::ShapeError(_))
        ));
    }

    #[test]
    fn exp_zero_and_axis() {
        let m = h3h3();
        let p = ProductPoint::basepoint(m.factors());
        assert_eq!(exp_map(&m, &p, &TangentVector::zero(p.clone())).unwrap(), p);
        let v = TangentVector::from_frame_coords(&m, p.clone(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        let y = exp_map(&m, &p, &v).unwrap();
        let expect = [1f64.cosh(), 1f64.sinh(), 0.0, 0.0];
        for (a, b) in y.factor(0).iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_off_hyperboloid() {
        assert!(ProductPoint::new(vec![vec![1.0, 0.5, 0.0]]).is_err());
        let p = ProductPoint::<f64>::basepoint(&[FactorSpec::real(3).unwrap()]);
        assert!(TangentVector::new(p, vec![vec![1.0, 0.0, 0.0, 0.0]]).is_err());
        assert!(FurstenbergPoint::new(vec![vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn f32_points_work() {
        let f = FactorSpec::real(3).unwrap();
        let m = ScaledProductMetric::<f32>::new(vec![f], vec![1.0]).unwrap();
        let p = ProductPoint::basepoint(m.factors());
        let y = ProductPoint::from_spatial(&[vec![1f32.sinh(), 0.0, 0.0]]);
        assert!((product_distance(&m, &p, &y).unwrap() - 1.0).abs() < 1e-5);
    }
}
