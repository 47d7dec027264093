pub mod adiabaticity;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod model;
pub mod spectrum;
pub mod sweeps;

pub use error::{CtapError, Result};
