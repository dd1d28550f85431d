//! Generators of power integral bases in pure quintic fields `Q(m^(1/5))`.
//!
//! The solver bounds the unit exponents of the index form equation with a
//! Baker-type estimate, shrinks the bound by LLL reduction, enumerates the
//! remaining exponent tuples with a modular sieve that eliminates the unit of
//! the quadratic subfield `Q(sqrt5)`, and verifies every candidate exactly.

pub mod baker;
pub mod cli;
pub mod embed;
pub mod error;
pub mod exact;
pub mod field;
pub mod linalg;
pub mod reduce;
pub mod sieve;
pub mod unitdata;
pub mod verify;

pub use error::{Error, Result};
