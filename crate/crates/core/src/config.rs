use serde::{Deserialize, Serialize};

/// Every numerical tolerance used by the laboratory, in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Hyperboloid constraint `<x,x> = -1` and tangency `<v,x> = 0`.
    pub hyperboloid: f64,
    /// Unit norm of boundary directions.
    pub unit_sphere: f64,
    /// Sum of centroid weights squared.
    pub centroid_norm: f64,
    /// Truncation time for the Busemann limit oracle.
    pub busemann_limit_time: f64,
    /// Agreement between closed-form and limit-oracle Busemann values.
    pub busemann_limit: f64,
    /// Newton/gradient stopping tolerance for the barycenter (g_min norm).
    pub barycenter: f64,
    /// Floor applied to Hessian eigenvalues inside Newton steps.
    pub hessian_floor: f64,
    /// Below this smallest Hessian eigenvalue the measure is degenerate.
    pub degenerate_hessian: f64,
    /// Maximum Newton iterations.
    pub max_newton_iterations: usize,
    /// Relative slack when comparing a Jacobian to its bound.
    pub jacobian_bound_slack: f64,
    /// Default central-difference step for Jacobians.
    pub jacobian_step: f64,
    /// Effective sample size, as a fraction of N, below which sampling is degenerate.
    pub ess_fraction: f64,
    /// Absolute slack for the determinant functional inequality.
    pub functional_slack: f64,
    /// Relative slack for the block determinant inequality.
    pub block_det_slack: f64,
    /// Trace-one tolerance for fuzzed matrices.
    pub trace_one: f64,
    /// Bisection tolerance for the critical exponent.
    pub critical_exponent: f64,
    /// Radius cutoff for ball-volume quadrature.
    pub quadrature_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hyperboloid: 1e-10,
            unit_sphere: 1e-12,
            centroid_norm: 1e-12,
            busemann_limit_time: 30.0,
            busemann_limit: 1e-8,
            barycenter: 1e-8,
            hessian_floor: 1e-8,
            degenerate_hessian: 1e-10,
            max_newton_iterations: 200,
            jacobian_bound_slack: 0.1,
            jacobian_step: 1e-3,
            ess_fraction: 0.01,
            functional_slack: 1e-12,
            block_det_slack: 1e-12,
            trace_one: 1e-10,
            critical_exponent: 0.02,
            quadrature_radius: 60.0,
        }
    }
}
