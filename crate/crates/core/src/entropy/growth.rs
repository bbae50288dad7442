//! Ball volumes and Poincaré-type integrals of scaled products, by nested
//! adaptive Simpson quadrature in log space.
//!
//! In polar coordinates on each factor the `g_β` volume element is
//! `Π β_i^{n_i} ω_{n_i-1} sinh^{n_i-1}(r_i) dr_i dθ_i`, and the `g_β` distance
//! from the center is `sqrt(Σ β_i² r_i²)`. The quadrature works in `f64`
//! regardless of the caller's scalar type.

use serde::{Deserialize, Serialize};

use super::product_entropy;
use crate::error::{Error, Result};
use crate::geometry::{FactorSpec, ProductPoint, ScaledProductMetric};
use crate::scalar::{log_sinh, log_unit_sphere_area, Real};

const PANELS: usize = 32;
const REL_TOL: f64 = 1e-9;
const MAX_DEPTH: u32 = 40;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + adapt(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

/// `ln ∫_a^b exp(log_f(t)) dt`, with the integrand shifted by its coarse
/// maximum so that neither overflow nor underflow occurs.
fn log_integrate(log_f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return f64::NEG_INFINITY;
    }
    let h = (b - a) / PANELS as f64;
    let nodes: Vec<f64> = (0..=2 * PANELS).map(|i| a + 0.5 * h * i as f64).collect();
    let logs: Vec<f64> = nodes.iter().map(|t| log_f(*t)).collect();
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let f = |t: f64| (log_f(t) - shift).exp();
    let vals: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let coarse: f64 = (0..PANELS)
        .map(|p| simpson(vals[2 * p], vals[2 * p + 1], vals[2 * p + 2], h))
        .sum();
    let eps = REL_TOL * coarse / PANELS as f64;
    let total: f64 = (0..PANELS)
        .map(|p| {
            let (x0, x1) = (nodes[2 * p], nodes[2 * p + 2]);
            let whole = simpson(vals[2 * p], vals[2 * p + 1], vals[2 * p + 2], h);
            adapt(&f, x0, x1, vals[2 * p], vals[2 * p + 1], vals[2 * p + 2], whole, eps, MAX_DEPTH)
        })
        .sum();
    if total > 0.0 {
        shift + total.ln()
    } else {
        f64::NEG_INFINITY
    }
}

struct Layer {
    beta: f64,
    n: usize,
    log_const: f64,
}

fn layers<T: Real>(metric: &ScaledProductMetric<T>) -> Result<Vec<Layer>> {
    metric.require_real()?;
    Ok(metric
        .factors()
        .iter()
        .zip(metric.scales())
        .map(|(f, b): (&FactorSpec, &T)| {
            let beta = b.to_f64_lossy();
            Layer {
                beta,
                n: f.n(),
                log_const: f.n() as f64 * beta.ln() + log_unit_sphere_area::<f64>(f.n() - 1),
            }
        })
        .collect())
}

/// `ln vol B(R)` using the first `depth` layers.
fn log_volume(layers: &[Layer], radius: f64) -> f64 {
    let Some((last, rest)) = layers.split_last() else {
        return if radius >= 0.0 { 0.0 } else { f64::NEG_INFINITY };
    };
    if radius <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let upper = radius / last.beta;
    let integrand = |r: f64| {
        let rem = (radius * radius - last.beta * last.beta * r * r).max(0.0).sqrt();
        last.log_const + (last.n - 1) as f64 * log_sinh(r) + log_volume(rest, rem)
    };
    log_integrate(&integrand, 0.0, upper)
}

/// `ln vol_{g_β} B(y, R)`; independent of `y` by homogeneity.
pub fn log_ball_volume<T: Real>(metric: &ScaledProductMetric<T>, radius: T) -> Result<T> {
    let radius = radius.to_f64_lossy();
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::ParameterError("radius must be finite and nonnegative".into()));
    }
    Ok(T::lit(log_volume(&layers(metric)?, radius)))
}

fn require_convergent<T: Real>(metric: &ScaledProductMetric<T>, s: T) -> Result<()> {
    let h = product_entropy(metric);
    if !(s > h) {
        return Err(Error::ParameterError(format!(
            "s = {s} must exceed h(g_beta) = {h}"
        )));
    }
    Ok(())
}

fn log_direct(layers: &[Layer], s: f64, r_max: f64, acc_sq: f64) -> f64 {
    let Some((last, rest)) = layers.split_last() else {
        return -s * acc_sq.sqrt();
    };
    let integrand = |r: f64| {
        let br = last.beta * r;
        last.log_const
            + (last.n - 1) as f64 * log_sinh(r)
            + log_direct(rest, s, r_max, acc_sq + br * br)
    };
    log_integrate(&integrand, 0.0, r_max / last.beta)
}

/// `ln ∫ e^{-s d(y,z)} dg_β(z)` by direct nested integration over the factor
/// radii, each truncated at `r_max / β_i`.
pub fn log_laplace_direct<T: Real>(metric: &ScaledProductMetric<T>, s: T, r_max: T) -> Result<T> {
    require_convergent(metric, s)?;
    Ok(T::lit(log_direct(
        &layers(metric)?,
        s.to_f64_lossy(),
        r_max.to_f64_lossy(),
        0.0,
    )))
}

/// `ln (s ∫_0^{r_max} e^{-st} vol B(y,t) dt)`, the polar-coordinate form of
/// the same integral.
pub fn log_laplace_polar<T: Real>(metric: &ScaledProductMetric<T>, s: T, r_max: T) -> Result<T> {
    require_convergent(metric, s)?;
    let layers = layers(metric)?;
    let s = s.to_f64_lossy();
    let integrand = |t: f64| -s * t + log_volume(&layers, t);
    Ok(T::lit(s.ln() + log_integrate(&integrand, 0.0, r_max.to_f64_lossy())))
}

/// Parameters of the critical-exponent bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalExponentOptions {
    /// Outer radius of the integration range.
    pub r_max: f64,
    /// Width of each of the two comparison windows ending at `r_max`.
    pub window: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub tolerance: f64,
    /// Spacing of the cached ball-volume grid.
    pub grid_step: f64,
}

impl Default for CriticalExponentOptions {
    fn default() -> Self {
        Self {
            r_max: 60.0,
            window: 5.0,
            tolerance: 0.02,
            grid_step: 0.1,
        }
    }
}

fn log_trapezoid(logs: &[f64], step: f64) -> f64 {
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = logs.len() - 1;
    let sum: f64 = logs
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            w * (l - shift).exp()
        })
        .sum();
    shift + (sum * step).ln()
}

/// Critical exponent of `s ↦ ∫ e^{-s d(y,z)} dg_β(z)`.
///
/// An exponent is classified as divergent when the integral of
/// `e^{-st} vol B(y,t)` over the outer window `[r_max - w, r_max]` exceeds
/// the integral over the window before it. Ball volumes are cached on a grid,
/// so each bisection step only reweights. Returns the midpoint of the final
/// bracket.
pub fn critical_exponent_estimate<T: Real>(
    metric: &ScaledProductMetric<T>,
    y: &ProductPoint<T>,
    s_bracket: (T, T),
    options: &CriticalExponentOptions,
) -> Result<T> {
    y.check_shape(metric.factors())?;
    let (mut lo, mut hi) = (s_bracket.0.to_f64_lossy(), s_bracket.1.to_f64_lossy());
    let o = options;
    if !(lo < hi && o.tolerance > 0.0 && o.window > 0.0 && o.grid_step > 0.0)
        || o.r_max < 2.0 * o.window
    {
        return Err(Error::ParameterError("invalid critical exponent options".into()));
    }
    let layers = layers(metric)?;
    let per_window = (o.window / o.grid_step).round().max(1.0) as usize;
    let step = o.window / per_window as f64;
    let start = o.r_max - 2.0 * o.window;
    let grid: Vec<(f64, f64)> = (0..=2 * per_window)
        .map(|i| {
            let t = start + step * i as f64;
            (t, log_volume(&layers, t))
        })
        .collect();
    let divergent = |s: f64| {
        let logs: Vec<f64> = grid.iter().map(|(t, lv)| lv - s * t).collect();
        log_trapezoid(&logs[per_window..], step) > log_trapezoid(&logs[..=per_window], step)
    };
    if !divergent(lo) || divergent(hi) {
        return Err(Error::BracketError { lo, hi });
    }
    while hi - lo > o.tolerance {
        let mid = 0.5 * (lo + hi);
        if divergent(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5 * (lo + hi)))
}
