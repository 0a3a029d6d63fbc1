//! Time-allocation model of household technology adoption, with the
//! estimation and calibration tools used to take it to browsing data.

pub mod calibration;
pub mod econometrics;
pub mod error;
pub mod exposure;
pub mod model;
pub mod numerics;
pub mod records;
pub mod synthpanel;

pub use error::{Error, Result};
