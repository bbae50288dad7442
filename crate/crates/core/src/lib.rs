//! Numerical tools for entropy rigidity on products of real hyperbolic spaces.
//!
//! The geometry and entropy layers are generic over [`Real`] (`f32` or `f64`).
//! Sampling, barycenters and the matrix inequalities run in `f64`.

pub mod barycenter;
pub mod config;
pub mod entropy;
mod error;
pub mod geometry;
pub mod inequalities;
pub mod measures;
pub mod rng;
mod scalar;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use scalar::{log_unit_sphere_area, Real};

pub type ProductPoint64 = geometry::ProductPoint<f64>;
pub type ProductPoint32 = geometry::ProductPoint<f32>;
pub type TangentVector64 = geometry::TangentVector<f64>;
pub type TangentVector32 = geometry::TangentVector<f32>;
pub type FurstenbergPoint64 = geometry::FurstenbergPoint<f64>;
pub type FurstenbergPoint32 = geometry::FurstenbergPoint<f32>;
pub type Metric64 = geometry::ScaledProductMetric<f64>;
pub type Metric32 = geometry::ScaledProductMetric<f32>;
