//! Almost Hermitian geometry and the ∂̄-energy flow of maps between
//! almost Hermitian manifolds, discretized on periodic grids.

pub mod discrete_map;
pub mod error;
pub mod field_io;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod hopf_family;
pub mod models;
pub mod rng;
pub mod spectrum;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
