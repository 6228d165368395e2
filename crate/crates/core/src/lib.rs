pub mod audit;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, Result};
