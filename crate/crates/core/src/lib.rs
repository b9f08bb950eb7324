//! Exact arithmetic for half-integral weight Siegel Eisenstein series:
//! generalized Gauss sums, cusp classification at level `4N` (`N` odd and
//! square-free), and Hecke eigenvalues for the operators `T_j(q^2)` at
//! primes dividing the level and `T_j(p^2)` away from it.
//!
//! All identities are verified in exact cyclotomic arithmetic; the only
//! floating point in the crate is the numeric embedding of [`CycNumber`]
//! and the truncated theta-series checks in [`gauss::numeric`].

pub mod counts;
pub mod cusps;
pub mod gauss;
pub mod hecke;
pub mod matz;
pub mod ring;
pub mod verify;

pub use cusps::{AdmissibleType, MultiplicativePartition, VanishingStatus};
pub use hecke::{EigenvalueTable, HalfIntegralContext, IntegralContext};
pub use matz::{CoprimePair, IntMatrix, Jordan2Data};
pub use ring::{CycNumber, DirichletCharacter};

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("matrix is singular where an invertible one is required")]
    Singular,
    #[error("enumeration budget exceeded: needs {needed} terms, budget {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("character modulus {found} does not match expected {expected}")]
    ModulusMismatch { expected: u64, found: u64 },
    #[error("degenerate spectrum: repeated diagonal eigenvalue")]
    DegenerateSpectrum,
    #[error("numeric branch tracking failed: {0}")]
    BranchTracking(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

/// Prime factors of an odd square-free positive integer, in increasing
/// order; errors out when `n` is even or has a square factor.
pub fn odd_squarefree_primes(n: u64) -> Result<Vec<u64>> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::arg(format!("{n} is not odd and positive")));
    }
    let mut out = Vec::new();
    let mut m = n;
    let mut p = 3u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return Err(Error::arg(format!("{n} is not square-free")));
            }
            out.push(p);
        }
        p += 2;
    }
    if m > 1 {
        out.push(m);
    }
    Ok(out)
}
