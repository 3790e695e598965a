//! Cycle-structure statistics of random and iterated permutations.
//!
//! The crate has three layers:
//!
//! * exact machinery: [`exactnum`] (big rationals, fixed-point reals,
//!   divisors) and [`series`] (truncated exponential generating functions);
//! * permutation statistics: [`classes`] (cycle-restricted permutation
//!   classes and their limiting probabilities), [`fixpoints`] (fixed points of
//!   `pi^k`) and [`permlab`] (sampling, enumeration, Monte Carlo);
//! * applications: [`keeloq`] (cipher plus fixed-point attacks at reduced
//!   width) and [`costmodel`] (success and cost calculators).
//!
//! Series arithmetic is generic over [`Scalar`]; the aliases below name the
//! instantiations used throughout.

pub mod acceptance;
pub mod classes;
pub mod costmodel;
pub mod error;
pub mod exactnum;
pub mod fixpoints;
pub mod keeloq;
pub mod permlab;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use exactnum::{DivisorProfile, HpReal};
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
pub use scalar::Scalar;

/// Exact coefficient field.
pub type Rational = BigRational;
/// Exact univariate series, the default for all generating-function work.
pub type RationalSeries = series::TruncatedSeries<BigRational>;
/// Exact bivariate series.
pub type RationalBivariate = series::BivariateSeries<BigRational>;
/// Double-precision series for quick numeric previews.
pub type F64Series = series::TruncatedSeries<f64>;
/// Single-precision series.
pub type F32Series = series::TruncatedSeries<f32>;

/// Default working precision in bits (overridable by callers).
pub const DEFAULT_PRECISION_BITS: u32 = 256;
