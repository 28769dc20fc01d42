pub mod error;
pub mod fbm;
pub mod experiment;
pub mod gauss;
pub mod hardy;
pub mod noise;
pub mod quad;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod wellposedness;

pub use error::{Error, Result};
