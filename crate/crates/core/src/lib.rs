pub mod charpoly;
pub mod cli;
pub mod embedcheck;
pub mod epsolver;
pub mod error;
pub mod model;
pub mod response;
pub mod spectral;

pub use error::{Error, Result};
