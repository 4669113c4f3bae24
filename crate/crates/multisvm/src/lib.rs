//! Multiband raster classification with soft-margin SVMs.
//!
//! The crate trains binary SVMs with sequential minimal optimization, lifts
//! them to multiclass classifiers through one-against-one voting or
//! one-against-all decomposition, classifies band-sequential rasters into
//! label maps with explicit unclassified/mixed sentinels, and compares the
//! two strategies with confusion matrices, kappa statistics, and a Z-test.

pub mod assessment;
pub mod error;
mod fsutil;
pub mod kernels;
pub mod model_io;
pub mod multiclass;
pub mod raster;
mod seed;
pub mod svm;

pub use error::{Error, Result};
