//! Wasserstein multivariate autoregression for time series of distributions on `[0, 1]`.
//!
//! Distributions are stored as quantile functions on a uniform grid. The
//! crate simulates from the model, estimates the coefficient matrix under
//! its nonnegativity and row-sum constraint, and exports the implied
//! interaction graph.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataio;
pub mod error;
pub mod estimate;
pub mod graphx;
pub mod linalg;
pub mod qfun;
pub mod series;
pub mod simulate;
pub mod svg;

pub use error::{Result, WmarError};
pub use estimate::{fit, fit_centered, FitOptions, FitReport};
pub use linalg::SquareMatrix;
pub use qfun::{Grid, QuantileGrid, Role};
pub use series::DistSeries;
pub use simulate::{CoeffMatrix, SimConfig};
