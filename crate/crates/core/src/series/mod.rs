//! Exact truncated power series in one and two variables.

mod bivariate;
mod univariate;

pub use bivariate::BivariateSeries;
pub use univariate::TruncatedSeries;
