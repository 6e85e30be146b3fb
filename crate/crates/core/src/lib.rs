//! Parsimonious mixtures of skew-t factor analyzers: densities, AECM
//! fitting, model selection and a command-line front end.

pub mod aecm;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod model;
pub mod selection;
pub mod specfun;

pub use error::{Error, Result};
