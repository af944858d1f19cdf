//! Sparse periodic threshold-VAR / threshold-ARCH modelling of wind speed,
//! wind direction and air pressure on a 10-minute grid.
//!
//! The crate covers the whole pipeline: loading and decomposing observations,
//! building periodic B-spline regressors, LASSO estimation with AIC tuning,
//! the iteratively reweighted fit of mean and volatility, bootstrap
//! forecasting, simple benchmark models, and forecast evaluation.

pub mod baseline;
pub mod basis;
pub mod config;
pub mod design;
pub mod error;
pub mod evaluation;
pub mod forecast;
pub mod irwls;
pub mod lasso;
pub mod stats;
pub mod synthetic;
pub mod timeseries;

pub use error::{Error, ErrorKind, Result};
