//! Geometry of real hyperbolic factors and their scaled products.

pub mod busemann;
mod factor;
pub mod hyperboloid;
mod isometry;
mod metric;
mod point;

pub use busemann::{
    factor_busemann, weighted_busemann, weighted_busemann_gradient, weighted_busemann_hessian,
    weighted_busemann_jet, BlockHessian,
};
pub use factor::{total_dimension, FactorSpec};
pub use isometry::ProductIsometry;
pub use metric::{CentroidWeighting, ScaledProductMetric};
pub use point::{
    exp_map, factor_distances, log_map, product_distance, FurstenbergPoint, ProductPoint,
    TangentVector,
};

/// Distance between two points of one factor.
pub fn factor_distance<T: crate::Real>(x: &[T], y: &[T]) -> crate::Result<T> {
    hyperboloid::distance(x, y)
}
