//! Travelling-salesman encodings for QAOA: polynomial construction, circuit
//! scheduling, exact statevector simulation, angle optimization and resource
//! estimates.

pub mod circuits;
pub mod encodings;
pub mod error;
pub mod optimizer;
pub mod polynomial;
pub mod resources;
pub mod simulator;

pub use error::{Error, Result};
