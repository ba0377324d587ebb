//! Construction and classification of solvable matrix groups over finite
//! fields that act primitively with small permutation rank on their natural
//! vector-space domain.
//!
//! The crate is organized bottom-up:
//!
//! - [`gfarith`]: arithmetic in GF(p^k) with a deterministic polynomial-basis
//!   representation.
//! - [`matlin`]: dense matrices over such fields — products, inverses,
//!   Kronecker products, restriction of scalars to the prime field.
//! - [`engine`]: finite matrix-group machinery — stabilizer chains, orbits,
//!   element enumeration, normalizers, derived series, permutation rank.
//! - [`modana`]: module-theoretic tests — irreducibility, homogeneity of
//!   normal-subgroup restrictions.
//! - [`extras`]: construction of symplectic-type p-groups and their
//!   normalizers in the ambient general linear group.
//! - [`classify`]: the search pipeline that enumerates candidate point
//!   stabilizers, applies the filters, and reproduces the result tables.
//! - [`cli`]: command-line front end.

pub mod cli;
pub mod classify;
pub mod engine;
pub mod extras;
pub mod gfarith;
pub mod matlin;
pub mod modana;

use thiserror::Error;

#[cfg(test)]
pub(crate) mod testrng {
    /// Tiny deterministic generator for property tests (splitmix64).
    pub struct SplitMix64(u64);

    impl SplitMix64 {
        pub fn new(seed: u64) -> Self {
            SplitMix64(seed)
        }

        pub fn next(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        }
    }
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the supported range (non-prime p, zero
    /// dimension, domain too large for the index type, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A search or enumeration would exceed the configured work budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// A matrix that must be invertible is singular.
    #[error("singular matrix in {0}")]
    Singular(String),

    /// Two operands live over different fields.
    #[error("mixed fields: {0}")]
    MixedFields(String),

    /// A file or string could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
