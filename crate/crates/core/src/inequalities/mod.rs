//! Linear algebra behind the Jacobian bound: division-algebra complex
//! structures, the determinant functional they define, and the block
//! determinant estimate for positive semidefinite matrices.

mod blockdet;
mod fuzz;

use nalgebra::DMatrix;

pub use blockdet::{block_det_chain, block_det_check, fuzz_block_det, random_psd, BlockDetReport};
pub use fuzz::{
    fuzz_lemma55, maximize_functional, random_trace_one, scan_lemma55, FuzzReport, Maximization,
};

use crate::error::{Error, Result};
use crate::geometry::FactorSpec;

/// The `d - 1` anticommuting orthogonal complex structures on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructureSet {
    pub n: usize,
    pub d: usize,
    pub j: Vec<DMatrix<f64>>,
}

fn quaternion_units() -> [DMatrix<f64>; 3] {
    // left multiplication by i and j on a + bi + cj + dk
    let i = DMatrix::from_row_slice(
        4,
        4,
        &[
            0., -1., 0., 0., //
            1., 0., 0., 0., //
            0., 0., 0., -1., //
            0., 0., 1., 0.,
        ],
    );
    let j = DMatrix::from_row_slice(
        4,
        4,
        &[
            0., 0., -1., 0., //
            0., 0., 0., 1., //
            1., 0., 0., 0., //
            0., -1., 0., 0.,
        ],
    );
    let k = &i * &j;
    [i, j, k]
}

fn block_diagonal(block: &DMatrix<f64>, copies: usize) -> DMatrix<f64> {
    let b = block.nrows();
    let mut m = DMatrix::zeros(b * copies, b * copies);
    for c in 0..copies {
        m.view_mut((c * b, c * b), (b, b)).copy_from(block);
    }
    m
}

/// Canonical structures: none for `d = 1`, the standard pairing for `d = 2`
/// and left quaternion multiplication on blocks of four for `d = 4`.
pub fn build_complex_structures(n: usize, d: usize) -> Result<ComplexStructureSet> {
    let j = match d {
        1 => Vec::new(),
        2 | 4 if n % d != 0 || n == 0 => {
            return Err(Error::ConfigError(format!("d = {d} requires n divisible by {d}, got n = {n}")))
        }
        2 => {
            let pair = DMatrix::from_row_slice(2, 2, &[0., -1., 1., 0.]);
            vec![block_diagonal(&pair, n / 2)]
        }
        4 => quaternion_units().iter().map(|u| block_diagonal(u, n / 4)).collect(),
        _ => return Err(Error::ConfigError(format!("d must be 1, 2 or 4, got {d}"))),
    };
    Ok(ComplexStructureSet { n, d, j })
}

/// `I - H - Σ J_k H J_k`.
pub fn functional_denominator(h: &DMatrix<f64>, structures: &ComplexStructureSet) -> DMatrix<f64> {
    let n = h.nrows();
    let mut m = DMatrix::identity(n, n) - h;
    for j in &structures.j {
        m -= j * h * j;
    }
    m
}

pub(crate) fn check_trace_one(h: &DMatrix<f64>, structures: &ComplexStructureSet, tol: f64) -> Result<()> {
    if !h.is_square() || h.nrows() != structures.n {
        return Err(Error::ShapeError(format!(
            "H is {}x{}, structures act on R^{}",
            h.nrows(),
            h.ncols(),
            structures.n
        )));
    }
    let asym = (h - h.transpose()).abs().max();
    if asym > tol {
        return Err(Error::ParameterError(format!("H is not symmetric (asymmetry {asym:e})")));
    }
    let tr = h.trace();
    if (tr - 1.0).abs() > tol {
        return Err(Error::ParameterError(format!("trace of H is {tr}, expected 1")));
    }
    Ok(())
}

/// Smallest eigenvalue of the denominator below which it counts as singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-9;

/// `ln det H^{1/2} - ln det(I - H - Σ J_k H J_k)`; `-∞` when `H` is singular.
pub fn log_bcg_functional(h: &DMatrix<f64>, structures: &ComplexStructureSet) -> Result<f64> {
    check_trace_one(h, structures, 1e-10)?;
    let denom = functional_denominator(h, structures);
    let den_eig = denom.symmetric_eigenvalues();
    let den_min = den_eig.min();
    if den_min < SINGULAR_DENOMINATOR {
        return Err(Error::DomainError(format!(
            "I - H - Σ J H J has eigenvalue {den_min:e}"
        )));
    }
    let log_den: f64 = den_eig.iter().map(|v| v.ln()).sum();
    let h_eig = h.symmetric_eigenvalues();
    let log_num = if h_eig.min() > 0.0 {
        0.5 * h_eig.iter().map(|v| v.ln()).sum::<f64>()
    } else {
        f64::NEG_INFINITY
    };
    Ok(log_num - log_den)
}

/// `det(H)^{1/2} / det(I - H - Σ J_k H J_k)` for symmetric PSD `H` of trace one.
pub fn bcg_functional(h: &DMatrix<f64>, structures: &ComplexStructureSet) -> Result<f64> {
    log_bcg_functional(h, structures).map(f64::exp)
}

/// `(√n / (n + d - 2))^n`.
pub fn bcg_bound(n: usize, d: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::ConfigError(format!("the bound needs n >= 3, got {n}")));
    }
    if !matches!(d, 1 | 2 | 4) || n % d != 0 {
        return Err(Error::ConfigError(format!("invalid (n, d) = ({n}, {d})")));
    }
    Ok(((n as f64).sqrt() / (n + d - 2) as f64).powi(n as i32))
}

/// Both sides of `(s/√n)^n Π (√n_i/h_i)^{n_i} = (s/h_min)^n`.
pub fn product_assembly(factors: &[FactorSpec], s: f64) -> Result<(f64, f64)> {
    let n: usize = factors.iter().map(FactorSpec::n).sum();
    let mut lhs = (s / (n as f64).sqrt()).powi(n as i32);
    for f in factors {
        lhs *= ((f.n() as f64).sqrt() / f.entropy() as f64).powi(f.n() as i32);
    }
    let h_min = crate::entropy::optimal_scales::<f64>(factors)?.h_min;
    Ok((lhs, (s / h_min).powi(n as i32)))
}
