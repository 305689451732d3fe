//! Rotating waves of reaction-diffusion systems: freezing, spectra and
//! certified exponential decay.

pub mod cli;
pub mod config;
pub mod constants;
pub mod decay;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod matrix_analysis;
pub mod model;
pub mod optimize;
pub mod pde;
pub mod pipeline;
pub mod special;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
