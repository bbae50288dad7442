use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rank-one symmetric factor: real dimension `n`, division-algebra
/// dimension `d`, and volume entropy `n + d - 2` when the maximal sectional
/// curvature is `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FactorRepr", into = "FactorRepr")]
pub struct FactorSpec {
    n: usize,
    d: usize,
}

impl FactorSpec {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::ConfigError(format!("factor dimension {n} < 3")));
        }
        match d {
            1 => {}
            2 if n % 2 == 0 => {}
            4 if n % 4 == 0 => {}
            2 | 4 => {
                return Err(Error::ConfigError(format!(
                    "dimension {n} not divisible by division-algebra dimension {d}"
                )))
            }
            _ => {
                return Err(Error::ConfigError(format!(
                    "division-algebra dimension {d} not in {{1,2,4}}"
                )))
            }
        }
        Ok(Self { n, d })
    }

    /// Real hyperbolic space `H^n`.
    pub fn real(n: usize) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `n + d - 2`.
    pub fn entropy(&self) -> usize {
        self.n + self.d - 2
    }

    pub fn is_real(&self) -> bool {
        self.d == 1
    }

    pub(crate) fn require_real(&self) -> Result<()> {
        if self.is_real() {
            Ok(())
        } else {
            Err(Error::ConfigError(format!(
                "geometry is implemented for real hyperbolic factors only (got d = {})",
                self.d
            )))
        }
    }
}

/// Accepts `[n, d]` or `{"n": .., "d": ..}`; writes `[n, d]`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FactorRepr {
    Pair(usize, usize),
    Named { n: usize, d: usize },
}

impl TryFrom<FactorRepr> for FactorSpec {
    type Error = Error;

    fn try_from(r: FactorRepr) -> Result<Self> {
        match r {
            FactorRepr::Pair(n, d) | FactorRepr::Named { n, d } => FactorSpec::new(n, d),
        }
    }
}

impl From<FactorSpec> for FactorRepr {
    fn from(f: FactorSpec) -> Self {
        FactorRepr::Pair(f.n, f.d)
    }
}

/// Total dimension `Σ n_i`.
pub fn total_dimension(factors: &[FactorSpec]) -> usize {
    factors.iter().map(FactorSpec::n).sum()
}
