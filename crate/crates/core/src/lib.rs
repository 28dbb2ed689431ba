pub mod cli;
pub mod config;
pub mod constants;
pub mod error;
pub mod fixtures;
pub mod fourier;
pub mod hamiltonian;
pub mod rates;
pub mod relaxation;
pub mod search;
pub mod sparse;
pub mod spin;
pub mod steady;
pub mod sweeps;
pub mod system;

pub use error::{Error, Result};
