use entropy_rigidity::barycenter::{jacobian_fd, jacobian_richardson, natural_map, NaturalMapConfig};
use entropy_rigidity::entropy::{
    critical_exponent_estimate, entropy_report, factor_entropy, numeric_optimal_scales, optimal_scales, product_entropy,
};
use entropy_rigidity::geometry::{
    exp_map, product_distance, FurstenbergPoint, ProductPoint, ScaledProductMetric, TangentVector,
};
use entropy_rigidity::inequalities::{fuzz_block_det, scan_lemma55};
use entropy_rigidity::measures::{cap_mass_with_error, sample_ps_pushforward, SigmaOptions};
use entropy_rigidity::rng::{self, domain};
use entropy_rigidity::Error;
use serde_json::json;

use crate::config::*;
use crate::output::{num, Table, Writer};
use crate::CliError;

/// What a subcommand found besides its output files.
#[derive(Debug, Default)]
pub struct Outcome {
    pub violation: bool,
    pub warnings: Vec<String>,
}

fn point_or_basepoint(metric: &ScaledProductMetric<f64>, y: &Option<Vec<Vec<f64>>>) -> Result<ProductPoint<f64>, CliError> {
    match y {
        None => Ok(ProductPoint::basepoint(metric.factors())),
        Some(spatial) => {
            let p = ProductPoint::from_spatial(spatial);
            p.check_shape(metric.factors())
                .map_err(|e| CliError::Config(format!("y: {e}")))?;
            Ok(p)
        }
    }
}

fn spatial(p: &ProductPoint<f64>) -> Vec<Vec<f64>> {
    p.factors().iter().map(|x| x[1..].to_vec()).collect()
}

pub fn optimal_metric(c: &OptimalMetricConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let opt = optimal_scales::<f64>(&c.factors)?;
    let oracle = numeric_optimal_scales::<f64>(&c.factors, 1e-10)?;
    let max_rel = opt
        .alpha
        .iter()
        .zip(&oracle.beta)
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(((opt.h_min - oracle.h) / opt.h_min).abs(), f64::max);
    let log_volume: f64 = c
        .factors
        .iter()
        .zip(&opt.alpha)
        .map(|(f, a)| f.n() as f64 * a.ln())
        .sum();
    let metric = ScaledProductMetric::optimal(c.factors.clone())?;
    let report = entropy_report(&metric, c.base_volume);
    let entropies = c
        .factors
        .iter()
        .map(|f| factor_entropy::<f64>(f.n(), f.d()))
        .collect::<Result<Vec<_>, _>>()?;
    out.json(
        "optimal_metric.json",
        &json!({
            "factors": c.factors,
            "alpha": opt.alpha,
            "h_min": opt.h_min,
            "ent_min": report.ent,
            "base_volume": c.base_volume,
            "factor_entropies": entropies,
            "centroid_weights": metric.centroid_weights(),
            "log_volume": log_volume,
            "oracle": {
                "beta": oracle.beta,
                "h": oracle.h,
                "kkt_residual": oracle.kkt_residual,
            },
            "max_relative_difference": max_rel,
        }),
    )?;
    let mut table = Table::new(&["quantity", "closed_form", "oracle", "relative_difference"]);
    let rows = opt
        .alpha
        .iter()
        .zip(&oracle.beta)
        .enumerate()
        .map(|(i, (a, b))| (format!("alpha_{i}"), *a, *b))
        .chain(std::iter::once(("h_min".to_string(), opt.h_min, oracle.h)));
    for (name, a, b) in rows {
        table.push(vec![name, num(a), num(b), num(((a - b) / a).abs())]);
    }
    out.csv("optimal_metric_oracle.csv", &table)?;
    let mut outcome = Outcome::default();
    if max_rel > 1e-6 {
        outcome
            .warnings
            .push(format!("closed form and numeric optimum differ by {max_rel:e}"));
    }
    Ok(outcome)
}

pub fn entropy(c: &EntropyConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let metric = c.beta.metric(&c.factors)?;
    let y = point_or_basepoint(&metric, &c.y)?;
    let h = product_entropy(&metric);
    let estimate = critical_exponent_estimate(&metric, &y, (c.s_bracket[0], c.s_bracket[1]), &c.estimator)?;
    let relative_error = (estimate - h).abs() / h;
    out.json(
        "entropy.json",
        &json!({
            "estimate": estimate,
            "product_entropy": h,
            "relative_error": relative_error,
            "scales": metric.scales(),
        }),
    )?;
    let mut outcome = Outcome::default();
    if relative_error > 0.02 {
        outcome
            .warnings
            .push(format!("estimate is {:.2}% from h(g)", 100.0 * relative_error));
    }
    Ok(outcome)
}

pub fn ps_concentration(c: &PsConcentrationConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let k = c.factors.len();
    let metric = ScaledProductMetric::new(c.factors.clone(), vec![1.0; k])?;
    let direction: Vec<Vec<f64>> = match &c.direction {
        Some(d) => d.clone(),
        None => c
            .factors
            .iter()
            .map(|f| {
                let mut v = vec![0.0; f.n()];
                v[0] = 1.0 / (k as f64).sqrt();
                v
            })
            .collect(),
    };
    if direction.len() != k || direction.iter().zip(&c.factors).any(|(v, f)| v.len() != f.n()) {
        return Err(CliError::Config("direction must have one vector per factor".into()));
    }
    let norms: Vec<f64> = direction.iter().map(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt()).collect();
    if norms.iter().any(|n| !(*n > 0.0)) {
        return Err(CliError::Config("the ray must be regular: every factor needs a nonzero direction".into()));
    }
    let endpoint = FurstenbergPoint::normalized(direction.clone())?;
    let mut table = Table::new(&["t", "cap_mass", "mc_err"]);
    let mut outcome = Outcome::default();
    let mut last: Option<(f64, f64)> = None;
    let p = ProductPoint::basepoint(metric.factors());
    for t in &c.times {
        let coords: Vec<f64> = direction.iter().flatten().map(|a| a * t).collect();
        let v = TangentVector::from_frame_coords(&metric, p.clone(), &coords)?;
        let x = exp_map(&metric, &p, &v)?;
        let nu = sample_ps_pushforward(&x, c.n, c.seed)?;
        let (mass, err) = cap_mass_with_error(&nu, &endpoint, c.angle)?;
        if let Some((m0, e0)) = last {
            if mass + 3.0 * (err * err + e0 * e0).sqrt() < m0 {
                outcome.warnings.push(format!("cap mass decreased beyond 3 sigma at t = {t}"));
            }
        }
        last = Some((mass, err));
        table.push(vec![num(*t), num(mass), num(err)]);
    }
    if let Some((m, _)) = last {
        if m < 0.90 {
            outcome.warnings.push(format!("hard failure: final cap mass {m} is below 0.90"));
        } else if m < 0.95 {
            outcome.warnings.push(format!("final cap mass {m} is below 0.95"));
        }
    }
    out.csv("ps_concentration.csv", &table)?;
    Ok(outcome)
}

pub fn barycenter(c: &BarycenterConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let metric = c.beta.metric(&c.factors)?;
    let h = product_entropy(&metric);
    let s = match (c.s, c.s_multiplier) {
        (Some(s), None) => s,
        (None, Some(m)) => m * h,
        _ => return Err(CliError::Config("give exactly one of s and s_multiplier".into())),
    };
    let y = point_or_basepoint(&metric, &c.y)?;
    let config = NaturalMapConfig {
        sigma: SigmaOptions::new(c.n_z, c.n_theta, c.seed).with_frame(c.frame),
        barycenter: c.solver,
    };
    let r = natural_map(&metric, &y, s, &config)?;
    let g_min = ScaledProductMetric::optimal(c.factors.clone())?;
    out.json(
        "barycenter.json",
        &json!({
            "s": s,
            "h_beta": h,
            "y": spatial(&y),
            "point": spatial(r.point()),
            "distance_to_y": product_distance(&g_min, r.point(), &y)?,
            "grad_norm": r.barycenter.grad_norm,
            "iterations": r.barycenter.iterations,
            "hess_min_eig": r.barycenter.hess_min_eig,
            "mu_ess": r.mu_ess,
            "sigma_ess": r.sigma_ess,
        }),
    )?;
    Ok(Outcome {
        violation: false,
        warnings: r.warnings,
    })
}

/// Scan point `k`: a uniform direction and a uniform `g_β` radius.
pub fn scan_point(metric: &ScaledProductMetric<f64>, seed: u64, k: u64, max_distance: f64) -> Result<ProductPoint<f64>, Error> {
    let mut r = rng::stream(seed, domain::TEST_POINTS, k);
    let dir = rng::unit_vector(&mut r, metric.dimension());
    let radius = max_distance * rng::uniform01(&mut r);
    let coords: Vec<f64> = dir.iter().map(|d| d * radius).collect();
    let p = ProductPoint::basepoint(metric.factors());
    let v = TangentVector::from_frame_coords(metric, p.clone(), &coords)?;
    exp_map(metric, &p, &v)
}

pub fn jacobian_scan(c: &JacobianScanConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let metric = c.beta.metric(&c.factors)?;
    let h = product_entropy(&metric);
    if !(c.s_multiplier > 1.0) {
        return Err(Error::ParameterError(format!(
            "s must exceed h(g_beta): s_multiplier = {} gives s = {} <= {h}",
            c.s_multiplier,
            c.s_multiplier * h
        ))
        .into());
    }
    let s = c.s_multiplier * h;
    let config = NaturalMapConfig {
        sigma: SigmaOptions::new(c.n_z, c.n_theta, c.seed).with_frame(c.frame),
        barycenter: Default::default(),
    };
    let mut table = Table::new(&[
        "y_id",
        "s",
        "jac_det",
        "bound",
        "ratio",
        "homothety_dev",
        "ess_min",
        "richardson_rel_diff",
    ]);
    let mut outcome = Outcome::default();
    for k in 0..c.n_points {
        let y = scan_point(&metric, c.seed, k as u64, c.max_distance)?;
        let (report, rich) = if k < c.richardson_points {
            let r = jacobian_richardson(&metric, &y, s, c.eps, &config, c.bound_slack)?;
            (r.coarse, Some(r.relative_difference))
        } else {
            (jacobian_fd(&metric, &y, s, c.eps, &config, c.bound_slack)?, None)
        };
        if report.violation {
            outcome.violation = true;
            outcome
                .warnings
                .push(format!("point {k}: |Jac| = {} exceeds the bound {}", report.jac_det.abs(), report.bound));
        }
        if report.ess_min < 0.05 * c.n_z.min(c.n_theta) as f64 {
            outcome.warnings.push(format!("point {k}: low effective sample size {}", report.ess_min));
        }
        if let Some(r) = rich {
            if r > 0.05 {
                outcome.warnings.push(format!("point {k}: step halving changed the determinant by {r}"));
            }
        }
        table.push(vec![
            k.to_string(),
            num(s),
            num(report.jac_det),
            num(report.bound),
            num(report.ratio),
            num(report.homothety_deviation),
            num(report.ess_min),
            rich.map(num).unwrap_or_default(),
        ]);
    }
    out.csv("jacobian_scan.csv", &table)?;
    Ok(outcome)
}

pub fn lemma55(c: &Lemma55Config, out: &mut Writer) -> Result<Outcome, CliError> {
    let r = scan_lemma55(c.n, c.d, c.trials, c.seed)?;
    out.json(
        "lemma55.json",
        &json!({
            "n": r.n,
            "d": r.d,
            "trials": r.trials,
            "violations": r.violations,
            "domain_errors": r.domain_errors,
            "max_ratio": r.max_ratio,
            "max_ratio_H": r.argmax_h,
            "argmax_H": if r.violations > 0 { Some(&r.counterexample) } else { None },
        }),
    )?;
    let mut outcome = Outcome::default();
    if r.violations > 0 {
        outcome.violation = true;
        outcome.warnings.push(format!("{} trials exceed the bound", r.violations));
    }
    Ok(outcome)
}

pub fn blockdet(c: &BlockdetConfig, out: &mut Writer) -> Result<Outcome, CliError> {
    let r = fuzz_block_det(c.trials, c.seed, c.slack)?;
    out.json("blockdet.json", &r)?;
    let mut outcome = Outcome::default();
    if r.violations > 0 {
        outcome.violation = true;
        outcome.warnings.push(format!("{} block determinant violations", r.violations));
    }
    Ok(outcome)
}
