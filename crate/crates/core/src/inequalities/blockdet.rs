use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// `G Gᵀ` with `G` an `n × rank` standard Gaussian matrix.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, rank, |_, _| rng::standard_normal(rng));
    let m = &g * g.transpose();
    (&m + m.transpose()) * 0.5
}

fn principal(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Determinant as the product of eigenvalues, with its round-off allowance
/// `Π(|λ_i| + e) - Π|λ_i|` for eigenvalue errors `e = n ε λ_max`.
fn det(m: &DMatrix<f64>) -> (f64, f64) {
    let n = m.nrows();
    if n == 0 {
        return (1.0, 0.0);
    }
    let eig = m.symmetric_eigenvalues();
    let e = n as f64 * f64::EPSILON * eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let value: f64 = eig.iter().product();
    let abs: f64 = eig.iter().map(|v| v.abs()).product();
    let padded: f64 = eig.iter().map(|v| v.abs() + e).product();
    (value, padded - abs)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::ShapeError("matrix must be square and nonempty".into()));
    }
    let scale = m.abs().max().max(1.0);
    if (m - m.transpose()).abs().max() > 1e-12 * scale {
        return Err(Error::ParameterError("matrix is not symmetric".into()));
    }
    Ok(())
}

fn compare(m: &DMatrix<f64>, first: &[usize], rest: &[usize], slack: f64) -> Result<(f64, f64)> {
    let (lhs, dl) = det(m);
    let (a, da) = det(&principal(m, first));
    let (c, dc) = det(&principal(m, rest));
    let rhs = a * c;
    let allowance = dl + da * c.abs() + a.abs() * dc + da * dc;
    if lhs > rhs * (1.0 + slack) + allowance {
        return Err(Error::CounterexampleFound(format!(
            "det M = {lhs:e} exceeds det A det C = {rhs:e} for M = {:?}",
            m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>()
        )));
    }
    Ok((lhs, rhs))
}

fn complement(n: usize, idx: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; n];
    for &i in idx {
        if i >= n || seen[i] {
            return Err(Error::ParameterError(format!("bad block index {i}")));
        }
        seen[i] = true;
    }
    Ok((0..n).filter(|i| !seen[*i]).collect())
}

/// `(det M, det A · det C)` for the block `A` on `first` and `C` on the rest.
pub fn block_det_check(m: &DMatrix<f64>, first: &[usize], slack: f64) -> Result<(f64, f64)> {
    check_symmetric(m)?;
    let rest = complement(m.nrows(), first)?;
    if first.is_empty() || rest.is_empty() {
        return Err(Error::ParameterError("both blocks must be nonempty".into()));
    }
    compare(m, first, &rest, slack)
}

/// `(det M, Π det M_b)` over a partition into blocks, checking each split of
/// the iterated estimate along the way.
pub fn block_det_chain(m: &DMatrix<f64>, blocks: &[Vec<usize>], slack: f64) -> Result<(f64, f64)> {
    check_symmetric(m)?;
    if blocks.len() < 2 {
        return Err(Error::ParameterError("need at least two blocks".into()));
    }
    let all: Vec<usize> = blocks.iter().flatten().copied().collect();
    if !complement(m.nrows(), &all)?.is_empty() || blocks.iter().any(Vec::is_empty) {
        return Err(Error::ParameterError("blocks must partition the indices".into()));
    }
    let mut remaining = all;
    for b in &blocks[..blocks.len() - 1] {
        let sub = principal(m, &remaining);
        let first: Vec<usize> = b
            .iter()
            .map(|i| remaining.iter().position(|r| r == i).expect("index in remaining"))
            .collect();
        block_det_check(&sub, &first, slack)?;
        remaining.retain(|i| !b.contains(i));
    }
    let lhs = det(m).0;
    let rhs: f64 = blocks.iter().map(|b| det(&principal(m, b)).0).product();
    Ok((lhs, rhs))
}

/// Outcome of [`fuzz_block_det`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDetReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `det M / Π det M_b` over trials with a positive right side.
    pub max_ratio: f64,
    /// Trials whose matrix is rank deficient.
    pub singular: usize,
}

fn random_partition<R: Rng>(rng: &mut R, n: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut cuts: Vec<usize> = Vec::new();
    while cuts.len() + 1 < parts {
        let c = rng.random_range(1..n);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut blocks = Vec::new();
    let mut start = 0;
    for c in cuts.into_iter().chain(std::iter::once(n)) {
        blocks.push(order[start..c].to_vec());
        start = c;
    }
    blocks
}

/// Random PSD matrices of size 2..=8 and random rank, each split into two
/// or more random blocks; violations are counted, not raised.
pub fn fuzz_block_det(trials: usize, seed: u64, slack: f64) -> Result<BlockDetReport> {
    if trials == 0 {
        return Err(Error::ParameterError("trials must be at least 1".into()));
    }
    let outcomes: Vec<(bool, f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, domain::BLOCK_FUZZ, t);
            let n = r.random_range(2..=8);
            let rank = r.random_range(1..=n);
            let m = random_psd(&mut r, n, rank);
            let parts = r.random_range(2..=n.min(4));
            let blocks = random_partition(&mut r, n, parts);
            match block_det_chain(&m, &blocks, slack) {
                Ok((lhs, rhs)) => {
                    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
                    Ok((false, ratio, rank < n))
                }
                Err(Error::CounterexampleFound(_)) => Ok((true, f64::INFINITY, rank < n)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(BlockDetReport {
        trials,
        violations: outcomes.iter().filter(|o| o.0).count(),
        max_ratio: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
        singular: outcomes.iter().filter(|o| o.2).count(),
    })
}
