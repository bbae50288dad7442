use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bcg_bound, build_complex_structures, functional_denominator, log_bcg_functional, ComplexStructureSet};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng::standard_normal(rng))
}

fn normalize_trace(m: DMatrix<f64>) -> DMatrix<f64> {
    let sym = (&m + m.transpose()) * 0.5;
    let tr = sym.trace();
    sym / tr
}

/// Random symmetric PSD matrix of trace one. `kind % 3` selects a Wishart
/// draw, a low-rank Wishart draw, or a Dirichlet spectrum in a random basis.
pub fn random_trace_one<R: Rng>(rng: &mut R, n: usize, kind: u64) -> DMatrix<f64> {
    match kind % 3 {
        0 => {
            let g = gaussian(rng, n, n);
            normalize_trace(&g * g.transpose())
        }
        1 => {
            let rank = 1 + rng.random_range(0..n);
            let g = gaussian(rng, n, rank);
            normalize_trace(&g * g.transpose())
        }
        _ => {
            let concentration = [0.05, 0.2, 1.0, 5.0][rng.random_range(0..4)];
            let gamma = Gamma::new(concentration, 1.0).expect("positive shape");
            let spectrum: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
            let total: f64 = spectrum.iter().sum();
            let q = gaussian(rng, n, n).qr().q();
            let d = DMatrix::from_diagonal(&DVector::from_iterator(n, spectrum.iter().map(|v| v / total)));
            normalize_trace(&q * d * q.transpose())
        }
    }
}

/// Outcome of [`scan_lemma55`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub violations: usize,
    pub domain_errors: usize,
    /// Largest `functional / bound` among defined trials.
    pub max_ratio: f64,
    pub argmax_h: Vec<Vec<f64>>,
    /// The worst violating `H`, if any.
    pub counterexample: Option<Vec<Vec<f64>>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

enum Trial {
    Domain,
    Value(f64, DMatrix<f64>),
}

/// Evaluate the functional on `trials` random matrices and count bound
/// violations (`functional > bound + 1e-12`) without failing on them.
pub fn scan_lemma55(n: usize, d: usize, trials: usize, seed: u64) -> Result<FuzzReport> {
    if trials == 0 {
        return Err(Error::ParameterError("trials must be at least 1".into()));
    }
    let bound = bcg_bound(n, d)?;
    let structures = build_complex_structures(n, d)?;
    let results: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, domain::LEMMA_FUZZ, t);
            let h = random_trace_one(&mut r, n, t);
            match log_bcg_functional(&h, &structures) {
                Ok(l) => Ok(Trial::Value(l.exp(), h)),
                Err(Error::DomainError(_)) => Ok(Trial::Domain),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut report = FuzzReport {
        n,
        d,
        trials,
        violations: 0,
        domain_errors: 0,
        max_ratio: 0.0,
        argmax_h: Vec::new(),
        counterexample: None,
    };
    let mut worst_excess = 0.0;
    for trial in results {
        match trial {
            Trial::Domain => report.domain_errors += 1,
            Trial::Value(v, h) => {
                let ratio = v / bound;
                if ratio > report.max_ratio || report.argmax_h.is_empty() {
                    report.max_ratio = ratio;
                    report.argmax_h = rows(&h);
                }
                let excess = v - bound;
                if excess > 1e-12 {
                    report.violations += 1;
                    if excess > worst_excess {
                        worst_excess = excess;
                        report.counterexample = Some(rows(&h));
                    }
                }
            }
        }
    }
    Ok(report)
}

/// [`scan_lemma55`], failing with `CounterexampleFound` on any violation.
pub fn fuzz_lemma55(n: usize, d: usize, trials: usize, seed: u64) -> Result<FuzzReport> {
    let report = scan_lemma55(n, d, trials, seed)?;
    if let Some(h) = &report.counterexample {
        return Err(Error::CounterexampleFound(format!(
            "{} of {} trials exceed the bound for (n, d) = ({n}, {d}); worst H = {h:?}",
            report.violations, report.trials
        )));
    }
    Ok(report)
}

/// Result of [`maximize_functional`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximization {
    pub h: Vec<Vec<f64>>,
    pub value: f64,
    pub bound: f64,
    /// `‖H - I/n‖_F`.
    pub distance_to_identity: f64,
    pub iterations: usize,
}

/// Gradient of `½ ln det H - ln det D(H)`, projected to trace zero.
fn projected_gradient(h: &DMatrix<f64>, structures: &ComplexStructureSet) -> Option<DMatrix<f64>> {
    let n = h.nrows();
    let h_inv = h.clone().try_inverse()?;
    let d_inv = functional_denominator(h, structures).try_inverse()?;
    let mut g = h_inv * 0.5 + &d_inv;
    for j in &structures.j {
        g += j * &d_inv * j;
    }
    let g = (&g + g.transpose()) * 0.5;
    let shift = g.trace() / n as f64;
    Some(g - DMatrix::identity(n, n) * shift)
}

/// Projected gradient ascent of the log functional over trace-one PD
/// matrices, from a random start.
pub fn maximize_functional(n: usize, d: usize, seed: u64, max_iterations: usize) -> Result<Maximization> {
    let bound = bcg_bound(n, d)?;
    let structures = build_complex_structures(n, d)?;
    let mut r = rng::stream(seed, domain::LEMMA_FUZZ, u64::MAX);
    let start = random_trace_one(&mut r, n, 0);
    let mut h = (start + DMatrix::identity(n, n) / n as f64) * 0.5;
    let eval = |m: &DMatrix<f64>| log_bcg_functional(m, &structures).ok().filter(|v| v.is_finite());
    let mut value = eval(&h).ok_or_else(|| Error::DomainError("start point outside the domain".into()))?;
    let mut step = 1e-3;
    let mut iterations = 0;
    while iterations < max_iterations {
        let g = projected_gradient(&h, &structures)
            .ok_or_else(|| Error::DomainError("singular matrix during ascent".into()))?;
        let gnorm2 = g.norm_squared();
        if gnorm2.sqrt() < 1e-13 {
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &h + &g * step;
            if let Some(v) = eval(&trial) {
                if v >= value + 1e-4 * step * gnorm2 {
                    h = trial;
                    value = v;
                    accepted = true;
                    step *= 1.5;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let distance_to_identity = (&h - DMatrix::identity(n, n) / n as f64).norm();
    Ok(Maximization {
        h: rows(&h),
        value: value.exp(),
        bound,
        distance_to_identity,
        iterations,
    })
}
