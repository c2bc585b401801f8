//! Bounds on the exponential growth constants of primitive subsets of the integers.
//!
//! A set of integers is *primitive* if no element divides another. Two counting
//! sequences are of interest: `f(n)`, the number of maximum-size (that is,
//! `n`-element) primitive subsets of `[2n]`, and `g(n)`, the number of all
//! primitive subsets of `[n]`. Both grow like `c^n`; this crate computes lower
//! and upper bounds on the two growth constants, conventionally `alpha` for
//! `f` and `beta` for `g`.
//!
//! The machinery decomposes `[2n]` (or `[n]`) into divisor lattices of smooth
//! numbers, counts antichains of those lattices exactly with dynamic
//! programming over their chain structure, and combines the counts into
//! products whose exponents are exact rationals. Everything upstream of the
//! final `exp` is either exact integer or exact rational arithmetic; the log
//! accumulation itself runs in double-double precision.
//!
//! Modules:
//! - [`primes`]: prime bases and a small sieve.
//! - [`lattice`]: smooth-number divisor lattices, chain decompositions, and
//!   the breakpoint partitions that make products over huge index ranges
//!   tractable.
//! - [`counting`]: the four antichain-count families `r`, `r'`, `R`, `R'`
//!   together with an exhaustive validation oracle.
//! - [`bounds`]: the bound formulas (basic, crude, and staged improved
//!   variants for both targets).
//! - [`oracles`]: exact brute-force ground truth for small instances.

pub mod bounds;
pub mod counting;
pub mod dd;
mod error;
pub mod lattice;
pub mod oracles;
pub mod primes;
pub mod weights;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
